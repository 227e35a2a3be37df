#include "radiotwin/ofdm.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "radiotwin/rng.hpp"

namespace radiotwin::ofdm {

namespace {
constexpr double kPi = std::numbers::pi;

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }
}  // namespace

std::vector<int> OfdmConfig::pilot_indices() const {
    std::vector<int> idx;
    idx.reserve(n_pilot);
    const int stride = n_subcarriers / n_pilot;  // 64/12 -> 5 with defaults
    for (int i = 0; i < n_pilot; ++i) idx.push_back(i * stride);
    return idx;
}

void OfdmConfig::validate() const {
    if (n_subcarriers <= 0 || n_data < 0 || n_pilot < 0)
        throw std::invalid_argument("OfdmConfig: counts must be positive");
    if (n_data + n_pilot != n_subcarriers)
        throw std::invalid_argument("OfdmConfig: n_data + n_pilot != n_subcarriers");
    if (cp_len < 0 || cp_len >= n_subcarriers)
        throw std::invalid_argument("OfdmConfig: cp_len must be in [0, n_subcarriers)");
    if (sample_rate <= 0.0 || carrier_freq <= 0.0)
        throw std::invalid_argument("OfdmConfig: rates must be positive");
}

namespace detail {

void dft(ComplexVec& v, bool inverse) {
    const size_t n = v.size();
    if (n <= 1) return;
    const double sgn = inverse ? 1.0 : -1.0;
    if (!is_pow2(n)) {
        ComplexVec out(n);
        for (size_t k = 0; k < n; ++k) {
            cdouble acc = 0.0;
            for (size_t t = 0; t < n; ++t) {
                const double a = sgn * 2.0 * kPi * double(k) * double(t) / double(n);
                acc += v[t] * cdouble(std::cos(a), std::sin(a));
            }
            out[k] = acc;
        }
        v.swap(out);
        return;
    }
    // Iterative radix-2 Cooley-Tukey with bit-reversal permutation.
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(v[i], v[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = sgn * 2.0 * kPi / double(len);
        const cdouble wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cdouble w(1.0);
            for (size_t j = 0; j < len / 2; ++j) {
                const cdouble u = v[i + j];
                const cdouble t = v[i + j + len / 2] * w;
                v[i + j] = u + t;
                v[i + j + len / 2] = u - t;
                w *= wl;
            }
        }
    }
}

}  // namespace detail

ComplexVec map_qpsk(const std::vector<uint8_t>& bits) {
    if (bits.size() % 2 != 0)
        throw std::invalid_argument("map_qpsk: bit count must be even, got " +
                                    std::to_string(bits.size()));
    static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    // Gray map indexed by (b0 b1).
    static const cdouble table[4] = {
        {inv_sqrt2, inv_sqrt2},    // 00
        {-inv_sqrt2, inv_sqrt2},   // 01
        {inv_sqrt2, -inv_sqrt2},   // 10
        {-inv_sqrt2, -inv_sqrt2},  // 11
    };
    ComplexVec out(bits.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) {
        const int idx = (bits[2 * i] ? 2 : 0) | (bits[2 * i + 1] ? 1 : 0);
        out[i] = table[idx];
    }
    return out;
}

ComplexVec ofdm_modulate(const ComplexVec& d, const OfdmConfig& cfg) {
    if (static_cast<int>(d.size()) != cfg.n_subcarriers)
        throw std::invalid_argument("ofdm_modulate: expected " +
                                    std::to_string(cfg.n_subcarriers) +
                                    " subcarrier symbols, got " +
                                    std::to_string(d.size()));
    ComplexVec x = d;
    detail::dft(x, /*inverse=*/true);
    const double scale = 1.0 / double(cfg.n_subcarriers);
    for (auto& v : x) v *= scale;
    return x;
}

ComplexVec ofdm_demodulate(const ComplexVec& y, const OfdmConfig& cfg) {
    if (static_cast<int>(y.size()) != cfg.n_subcarriers)
        throw std::invalid_argument("ofdm_demodulate: expected " +
                                    std::to_string(cfg.n_subcarriers) +
                                    " samples, got " + std::to_string(y.size()));
    ComplexVec Y = y;
    detail::dft(Y, /*inverse=*/false);
    return Y;
}

ComplexVec add_cyclic_prefix(const ComplexVec& x, const OfdmConfig& cfg) {
    if (static_cast<int>(x.size()) != cfg.n_subcarriers)
        throw std::invalid_argument("add_cyclic_prefix: expected " +
                                    std::to_string(cfg.n_subcarriers) +
                                    " samples, got " + std::to_string(x.size()));
    const int n = cfg.n_subcarriers;
    const int l = cfg.cp_len;
    ComplexVec out(n + l);
    for (int i = 0; i < l; ++i) out[i] = x[n - l + i];
    for (int i = 0; i < n; ++i) out[l + i] = x[i];
    return out;
}

ComplexVec remove_cyclic_prefix(const ComplexVec& x_cp, const OfdmConfig& cfg) {
    if (static_cast<int>(x_cp.size()) != cfg.n_subcarriers + cfg.cp_len)
        throw std::invalid_argument("remove_cyclic_prefix: expected " +
                                    std::to_string(cfg.n_subcarriers + cfg.cp_len) +
                                    " samples, got " + std::to_string(x_cp.size()));
    return ComplexVec(x_cp.begin() + cfg.cp_len, x_cp.end());
}

ComplexVec apply_channel(const ComplexVec& tx, const ComplexVec& h,
                         double noise_var, uint64_t seed,
                         const OfdmConfig& cfg) {
    if (static_cast<int>(h.size()) != cfg.n_subcarriers)
        throw std::invalid_argument("apply_channel: channel length mismatch");
    if (noise_var < 0.0)
        throw std::invalid_argument("apply_channel: noise_var must be >= 0");

    const bool has_cp = static_cast<int>(tx.size()) == cfg.n_subcarriers + cfg.cp_len;
    if (!has_cp && static_cast<int>(tx.size()) != cfg.n_subcarriers)
        throw std::invalid_argument("apply_channel: symbol length mismatch");

    ComplexVec core = has_cp ? remove_cyclic_prefix(tx, cfg) : tx;

    // With the cyclic prefix the channel acts as circular convolution, i.e.
    // per-subcarrier multiplication in the frequency domain.
    ComplexVec spectrum = ofdm_demodulate(core, cfg);
    for (int k = 0; k < cfg.n_subcarriers; ++k) spectrum[k] *= h[k];
    ComplexVec rx = ofdm_modulate(spectrum, cfg);

    if (noise_var > 0.0) {
        Rng rng(seed);
        for (auto& v : rx) v += rng.cgaussian(noise_var);
    }
    return has_cp ? add_cyclic_prefix(rx, cfg) : rx;
}

CfrFrame ls_estimate(const std::vector<ComplexVec>& d_obs,
                     const std::vector<ComplexVec>& y_obs,
                     const OfdmConfig& cfg) {
    if (d_obs.empty() || d_obs.size() != y_obs.size())
        throw std::invalid_argument("ls_estimate: need equal, nonzero observation counts");
    const int n = cfg.n_subcarriers;
    for (size_t m = 0; m < d_obs.size(); ++m) {
        if (static_cast<int>(d_obs[m].size()) != n ||
            static_cast<int>(y_obs[m].size()) != n)
            throw std::invalid_argument("ls_estimate: observation " +
                                        std::to_string(m) + " has wrong length");
    }
    CfrFrame frame;
    frame.h.resize(n);
    for (int k = 0; k < n; ++k) {
        double den = 0.0;
        cdouble num = 0.0;
        for (size_t m = 0; m < d_obs.size(); ++m) {
            den += std::norm(d_obs[m][k]);
            num += std::conj(d_obs[m][k]) * y_obs[m][k];
        }
        if (den <= 0.0)
            throw std::invalid_argument(
                "ls_estimate: zero pilot energy on subcarrier " + std::to_string(k));
        frame.h[k] = num / den;
    }
    return frame;
}

}  // namespace radiotwin::ofdm
