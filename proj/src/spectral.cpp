#include "radiotwin/spectral.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace radiotwin::spectral {

const std::vector<double>& cos_basis(int n) {
    static std::mutex mtx;
    static std::map<int, std::unique_ptr<std::vector<double>>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto& entry = cache[n];
    if (!entry) {
        entry = std::make_unique<std::vector<double>>(size_t(n) * n);
        auto& c = *entry;
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                c[size_t(k) * n + i] =
                    std::cos(std::numbers::pi / n * (i + 0.5) * k);
    }
    return *entry;
}

std::vector<double> dct2(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    if (n < 1) throw std::invalid_argument("dct2: empty input");
    const auto& c = cos_basis(n);
    std::vector<double> out(n);
    for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        const double* row = &c[size_t(k) * n];
        for (int i = 0; i < n; ++i) acc += x[i] * row[i];
        out[k] = acc;
    }
    return out;
}

std::vector<double> idct2(const std::vector<double>& X) {
    const int n = static_cast<int>(X.size());
    if (n < 1) throw std::invalid_argument("idct2: empty input");
    const auto& c = cos_basis(n);
    std::vector<double> out(n, X[0]);
    for (int k = 1; k < n; ++k) {
        const double* row = &c[size_t(k) * n];
        const double xk2 = 2.0 * X[k];
        for (int i = 0; i < n; ++i) out[i] += xk2 * row[i];
    }
    const double inv_n = 1.0 / n;
    for (auto& v : out) v *= inv_n;
    return out;
}

}  // namespace radiotwin::spectral
