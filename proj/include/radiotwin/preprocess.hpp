#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radiotwin/physio.hpp"

namespace radiotwin::preprocess {

// Row-major real matrix; rows are channels, columns are time samples.
struct RealMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    RealMatrix() = default;
    RealMatrix(int r, int c) : rows(r), cols(c), data(size_t(r) * c, 0.0) {}
    double& at(int r, int c) { return data[size_t(r) * cols + c]; }
    double at(int r, int c) const { return data[size_t(r) * cols + c]; }
    double* row(int r) { return &data[size_t(r) * cols]; }
    const double* row(int r) const { return &data[size_t(r) * cols]; }
};

// One aligned training example: z-scored radio block (2*n_ch x 450) and the
// matching z-scored PPG window.
struct SegmentPair {
    RealMatrix radio;
    std::vector<double> ppg;
    std::string subject_id;
    int64_t segment_index = 0;
    bool augmented = false;
};

struct AlignmentResult {
    int64_t lag = 0;    // samples; positive = second signal delayed vs first
    double score = 0.0;
};

// Uniform-stride subcarrier selection: indices floor(i * 64 / n_ch).
physio::RadioRecording select_channels(const physio::RadioRecording& rec, int n_ch);
std::vector<int> stride_indices(int total, int n_ch);

// Splits each complex channel into real and imaginary rows:
// [re_0..re_{n-1}, im_0..im_{n-1}].
RealMatrix expand_complex(const physio::RadioRecording& rec);

// Non-overlapping windows of win_s seconds; the trailing remainder is
// dropped. Throws when the stream is shorter than one window.
std::vector<std::vector<double>> segment(const std::vector<double>& stream,
                                         double rate, double win_s = 2.5);

// Population z-score. Throws on constant input.
std::vector<double> zscore(const std::vector<double>& x);

// Originals followed by noisy copies (augmented=true), radio and ppg both
// perturbed with N(0, noise_var) noise.
std::vector<SegmentPair> augment(const std::vector<SegmentPair>& pairs,
                                 double noise_var, uint64_t seed);

// Subtracts the level-`levels` db2 approximation (the low-frequency trend).
physio::PpgRecording detrend_wavelet(const physio::PpgRecording& ppg, int levels = 9);

// Zero-phase 12th-order lowpass Butterworth, 4 Hz default cutoff.
std::vector<double> butterworth_lowpass(const std::vector<double>& x, double rate,
                                        double cutoff = 4.0, int order = 12);

// Level-7 db2 detail band reconstructed to input length; covers roughly
// 0.98-1.95 Hz at the 250 Hz CFR rate.
std::vector<double> extract_d7(const std::vector<double>& channel_mag, double rate);

// Grid search of the inner product <y delayed by tau, w> over
// tau in [-max_lag, max_lag]; ties resolve toward the smallest |tau|.
// Positive lag means y is delayed relative to w.
AlignmentResult align(const std::vector<double>& w, const std::vector<double>& y,
                      int max_lag);

// Linear-interpolation resampling onto out_len points spanning the input.
std::vector<double> resample_to(const std::vector<double>& x, int out_len = 450);

struct BuildOptions {
    int n_ch = 16;
    std::vector<int> channel_indices;  // overrides n_ch stride when nonempty
    double win_s = 2.5;
    int out_len = 450;
    double max_lag_s = 1.0;
    int detrend_levels = 9;
    double lowpass_hz = 4.0;
    int lowpass_order = 12;
};

// Full conditioning pipeline: channel selection, D7-based lag recovery and
// compensation, complex expansion, windowing, resampling to out_len and
// per-row z-scoring. Degenerate (constant) windows are dropped.
std::vector<SegmentPair> build_pairs(const physio::RadioRecording& radio,
                                     const physio::PpgRecording& ppg,
                                     const BuildOptions& opt = {});

// The alignment step of build_pairs, exposed for lag-recovery checks.
// Returned lag is in CFR samples at the radio rate.
AlignmentResult compute_alignment(const physio::RadioRecording& radio,
                                  const physio::PpgRecording& ppg,
                                  const BuildOptions& opt = {});

}  // namespace radiotwin::preprocess
