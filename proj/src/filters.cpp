#include "radiotwin/filters.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace radiotwin::filters {

namespace {
constexpr double kPi = std::numbers::pi;
}

double Sos::pole_radius() const { return std::sqrt(a2); }

std::vector<Sos> butterworth_lowpass_sos(int order, double cutoff_hz, double rate_hz) {
    if (order < 2 || order % 2 != 0)
        throw std::invalid_argument("butterworth_lowpass_sos: order must be even and >= 2");
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < rate_hz / 2.0))
        throw std::invalid_argument("butterworth_lowpass_sos: cutoff must lie in (0, rate/2)");

    const double fs2 = 2.0 * rate_hz;
    const double warped = fs2 * std::tan(kPi * cutoff_hz / rate_hz);

    std::vector<Sos> sections;
    sections.reserve(order / 2);
    for (int k = 1; k <= order / 2; ++k) {
        const double theta = kPi / 2.0 + (2.0 * k - 1.0) * kPi / (2.0 * order);
        const std::complex<double> s = warped * std::polar(1.0, theta);
        const std::complex<double> z = (fs2 + s) / (fs2 - s);
        const double a1 = -2.0 * z.real();
        const double a2 = std::norm(z);
        // Two zeros at z = -1; gain normalized for unit DC response.
        const double g = (1.0 + a1 + a2) / 4.0;
        Sos sec{g, 2.0 * g, g, a1, a2};
        if (sec.pole_radius() >= 1.0)
            throw std::invalid_argument(
                "butterworth_lowpass_sos: unstable section (pole radius >= 1)");
        sections.push_back(sec);
    }
    return sections;
}

namespace {

// DF2T, with initial state set to the DC steady state for x[0]. A constant
// input therefore passes through without any startup transient.
void run_section(const Sos& s, std::vector<double>& x) {
    if (x.empty()) return;
    double s0 = (1.0 - s.b0) * x[0];
    double s1 = (s.b2 - s.a2) * x[0];
    for (double& v : x) {
        const double in = v;
        const double out = s.b0 * in + s0;
        s0 = s.b1 * in - s.a1 * out + s1;
        s1 = s.b2 * in - s.a2 * out;
        v = out;
    }
}

}  // namespace

std::vector<double> sosfilt(const std::vector<Sos>& sections, const std::vector<double>& x) {
    std::vector<double> y = x;
    for (const auto& s : sections) run_section(s, y);
    return y;
}

std::vector<double> filtfilt(const std::vector<Sos>& sections, const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    if (n == 0) return {};
    const int pad = std::min(n - 1, 150);

    // Odd reflection about the end points.
    std::vector<double> ext;
    ext.reserve(size_t(n) + 2 * pad);
    for (int i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (int i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    ext = sosfilt(sections, ext);
    std::reverse(ext.begin(), ext.end());
    ext = sosfilt(sections, ext);
    std::reverse(ext.begin(), ext.end());

    return std::vector<double>(ext.begin() + pad, ext.begin() + pad + n);
}

}  // namespace radiotwin::filters
