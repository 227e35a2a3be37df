#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace radiotwin {

// Deterministic random source. All distributions are generated from raw
// mt19937_64 output by our own code so that streams are identical across
// standard library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t bits() { return engine_(); }

    bool bit() { return (engine_() >> 32) & 1u; }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [0, n).
    uint64_t index(uint64_t n) {
        // Modulo bias is negligible for n << 2^64 and irrelevant here.
        return engine_() % n;
    }

    // Standard normal via Box-Muller, one pair per two calls.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Circular complex Gaussian with total variance `var` (var/2 per component).
    std::complex<double> cgaussian(double var) {
        const double s = std::sqrt(var / 2.0);
        return {s * gaussian(), s * gaussian()};
    }

    // Derive an independent stream, e.g. per subject or per segment.
    static uint64_t derive(uint64_t seed, uint64_t index) {
        // SplitMix64 over seed ^ golden-ratio-scrambled index.
        uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace radiotwin
