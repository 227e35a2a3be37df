#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace radiotwin::ofdm {

using cdouble = std::complex<double>;
using ComplexVec = std::vector<cdouble>;

// Baseband OFDM link parameters. Defaults describe the 64-channel link the
// simulator models: 20 kHz sample rate, 16-sample cyclic prefix, QPSK on
// every subcarrier, 5.23 GHz carrier.
struct OfdmConfig {
    int n_subcarriers = 64;
    int n_data = 52;
    int n_pilot = 12;
    int cp_len = 16;
    double sample_rate = 20000.0;
    double carrier_freq = 5.23e9;

    // CFR frames come out at one per OFDM symbol.
    double symbol_rate() const { return sample_rate / (n_subcarriers + cp_len); }

    double subcarrier_spacing() const { return sample_rate / n_subcarriers; }

    // Pilot bins, evenly strided over the band. LS estimation in this
    // project runs in training-symbol mode (all bins known), so these are
    // informational.
    std::vector<int> pilot_indices() const;

    // Throws std::invalid_argument on inconsistent parameters.
    void validate() const;
};

// One least-squares CFR estimate: h[k] per subcarrier for a single symbol.
struct CfrFrame {
    ComplexVec h;
    int64_t symbol_index = 0;
    double timestamp = 0.0;
};

// Gray-coded QPSK: 00 -> (1+j)/sqrt2, 01 -> (-1+j)/sqrt2,
// 11 -> (-1-j)/sqrt2, 10 -> (1-j)/sqrt2. Unit symbol energy.
// Throws std::invalid_argument for an odd bit count.
ComplexVec map_qpsk(const std::vector<uint8_t>& bits);

// x[n] = (1/N) sum_k d[k] exp(+j 2 pi k n / N). Length must equal
// cfg.n_subcarriers.
ComplexVec ofdm_modulate(const ComplexVec& d, const OfdmConfig& cfg);

// Y[k] = sum_n y[n] exp(-j 2 pi k n / N). Input is one symbol with the
// cyclic prefix already removed.
ComplexVec ofdm_demodulate(const ComplexVec& y, const OfdmConfig& cfg);

// Prepends the last cp_len samples of x.
ComplexVec add_cyclic_prefix(const ComplexVec& x, const OfdmConfig& cfg);

ComplexVec remove_cyclic_prefix(const ComplexVec& x_cp, const OfdmConfig& cfg);

// Per-subcarrier multiplicative channel plus AWGN. Accepts a symbol with or
// without cyclic prefix and returns the same layout. Noise is circular
// complex Gaussian per time-domain sample with total variance noise_var
// (noise_var/2 per component), drawn deterministically from `seed`.
ComplexVec apply_channel(const ComplexVec& tx, const ComplexVec& h,
                         double noise_var, uint64_t seed,
                         const OfdmConfig& cfg);

// Stacked least-squares estimate over m observations of known symbols:
// h[k] = sum_m conj(d_m[k]) y_m[k] / sum_m |d_m[k]|^2.
// Throws std::invalid_argument when some subcarrier has zero pilot energy
// (message names the offending bin).
CfrFrame ls_estimate(const std::vector<ComplexVec>& d_obs,
                     const std::vector<ComplexVec>& y_obs,
                     const OfdmConfig& cfg);

namespace detail {
// Unnormalized DFT/IDFT used by the modulator; radix-2 when the size is a
// power of two, direct summation otherwise.
void dft(ComplexVec& v, bool inverse);
}  // namespace detail

}  // namespace radiotwin::ofdm
