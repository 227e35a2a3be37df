#include "radiotwin/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace radiotwin::wavelet {

namespace {

// db2 synthesis (reconstruction) filters; analysis filters are their
// time reverses.
constexpr int kF = 4;
const double kRecLo[kF] = {0.48296291314453416, 0.8365163037378077,
                           0.22414386804201339, -0.12940952255126037};
const double kRecHi[kF] = {-0.12940952255126037, -0.22414386804201339,
                           0.8365163037378077, -0.48296291314453416};

// Half-sample symmetric extension: ... x1 x0 | x0 x1 ... xn-1 | xn-1 xn-2 ...
inline double ext_at(const std::vector<double>& x, long long e) {
    const long long n = static_cast<long long>(x.size());
    while (e < 0 || e >= n) {
        if (e < 0) e = -e - 1;
        if (e >= n) e = 2 * n - 1 - e;
    }
    return x[static_cast<size_t>(e)];
}

}  // namespace

Bands dwt_db2(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    if (n < 2) throw std::invalid_argument("dwt_db2: input too short");
    const int out_len = (n + kF - 1) / 2;
    Bands b;
    b.input_len = n;
    b.approx.resize(out_len);
    b.detail.resize(out_len);
    for (int i = 0; i < out_len; ++i) {
        double lo = 0.0, hi = 0.0;
        for (int m = 0; m < kF; ++m) {
            // Analysis filter = reversed synthesis filter.
            const double s = ext_at(x, 2LL * i + m - (kF - 2));
            lo += kRecLo[m] * s;
            hi += kRecHi[m] * s;
        }
        b.approx[i] = lo;
        b.detail[i] = hi;
    }
    return b;
}

std::vector<double> idwt_db2(const Bands& b) {
    const int n = b.input_len;
    const int in_len = static_cast<int>(b.approx.size());
    if (static_cast<int>(b.detail.size()) != in_len)
        throw std::invalid_argument("idwt_db2: band length mismatch");
    std::vector<double> out(n, 0.0);
    for (int t = 0; t < n; ++t) {
        // Contributions from coefficients i with 0 <= t - 2i + F - 2 < F;
        // the in-loop guard discards the fringe of this conservative range.
        for (int i = std::max(0, (t - 1) / 2 - 1); i <= (t + kF - 2) / 2; ++i) {
            if (i >= in_len) break;
            const int m = t - 2 * i + kF - 2;
            if (m < 0 || m >= kF) continue;
            out[t] += b.approx[i] * kRecLo[m] + b.detail[i] * kRecHi[m];
        }
    }
    return out;
}

MultilevelDecomposition wavedec_db2(const std::vector<double>& x, int levels) {
    if (levels < 1) throw std::invalid_argument("wavedec_db2: levels must be >= 1");
    MultilevelDecomposition dec;
    std::vector<double> cur = x;
    for (int l = 0; l < levels; ++l) {
        if (cur.size() < 2)
            throw std::invalid_argument("wavedec_db2: input too short for level " +
                                        std::to_string(l + 1));
        Bands b = dwt_db2(cur);
        dec.level_input_len.push_back(b.input_len);
        dec.details.push_back(std::move(b.detail));
        cur = std::move(b.approx);
    }
    dec.approx = std::move(cur);
    return dec;
}

std::vector<double> waverec_db2(const MultilevelDecomposition& dec,
                                bool keep_approx, int keep_detail_level) {
    const int levels = static_cast<int>(dec.details.size());
    std::vector<double> cur = dec.approx;
    if (!keep_approx)
        cur.assign(cur.size(), 0.0);
    for (int l = levels; l >= 1; --l) {
        Bands b;
        b.input_len = dec.level_input_len[l - 1];
        b.approx = std::move(cur);
        const bool keep = keep_detail_level == -1 || keep_detail_level == l;
        b.detail = keep ? dec.details[l - 1]
                        : std::vector<double>(dec.details[l - 1].size(), 0.0);
        cur = idwt_db2(b);
    }
    return cur;
}

}  // namespace radiotwin::wavelet
