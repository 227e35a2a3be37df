#pragma once

#include <vector>

namespace radiotwin::filters {

// One biquad in direct form II transposed.
struct Sos {
    double b0, b1, b2;  // numerator
    double a1, a2;      // denominator (a0 normalized to 1)

    double pole_radius() const;
};

// Lowpass Butterworth of even order as a cascade of second-order sections,
// bilinear transform with cutoff prewarping, unit DC gain per section.
// Throws std::invalid_argument for bad parameters and a design error when a
// section comes out non-stable.
std::vector<Sos> butterworth_lowpass_sos(int order, double cutoff_hz, double rate_hz);

// Single-pass causal filtering with DC-matched initial state.
std::vector<double> sosfilt(const std::vector<Sos>& sections, const std::vector<double>& x);

// Zero-phase forward-backward filtering with odd reflection padding.
std::vector<double> filtfilt(const std::vector<Sos>& sections, const std::vector<double>& x);

}  // namespace radiotwin::filters
