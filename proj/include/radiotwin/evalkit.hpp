#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "radiotwin/models.hpp"
#include "radiotwin/physio.hpp"
#include "radiotwin/preprocess.hpp"

namespace radiotwin::evalkit {

using preprocess::SegmentPair;

enum class SplitKind { pooled, ltso };

// Augmented copies always land on the same side as their originals.
struct SplitPlan {
    SplitKind kind = SplitKind::pooled;
    uint64_t seed = 0;
    // pooled
    std::vector<int> train_idx;
    std::vector<int> test_idx;
    // ltso
    struct Fold {
        std::array<std::string, 2> held_out;
        std::vector<int> train_idx;
        std::vector<int> test_idx;
    };
    std::vector<Fold> folds;
};

SplitPlan make_split(const std::vector<SegmentPair>& pairs, SplitKind kind,
                     uint64_t seed);

struct Histogram {
    std::vector<double> edges;  // bins+1 edges
    std::vector<int64_t> counts;
};

// Table-II style summary. The histogram covers the per-segment MAE list, so
// counts sum to the segment count.
struct MetricsReport {
    double rmse = 0.0;
    double mae_mean = 0.0, mae_std = 0.0, mae_median = 0.0;
    double mse_mean = 0.0, mse_std = 0.0;
    std::vector<double> segment_mae;
    std::vector<double> segment_mse;
    Histogram histogram;
};

MetricsReport reconstruction_metrics(const std::vector<std::vector<double>>& preds,
                                     const std::vector<std::vector<double>>& targets,
                                     int bins = 64);

// Pointwise signed-error histogram over all samples (the error-distribution
// figures); counts sum to segment count * segment length.
Histogram pointwise_error_histogram(const std::vector<std::vector<double>>& preds,
                                    const std::vector<std::vector<double>>& targets,
                                    int bins = 64);

// (1/n) sum |true - measured| / |true|, as a fraction. Throws naming the
// first index whose true value is zero.
double mrae(const std::vector<double>& truth, const std::vector<double>& measured);

// (1/n) sum std_i / |true_i|.
double mrsd(const std::vector<double>& truth, const std::vector<double>& stds);

// Waveform-level relative absolute error of one segment,
// sum |err| / sum |ref|; the twin-PPG "MRAE" of the ablation table is the
// mean of this over test segments.
double segment_rae(const std::vector<double>& ref, const std::vector<double>& twin);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd waveform_mrae(const std::vector<std::vector<double>>& refs,
                      const std::vector<std::vector<double>>& twins);

// ---- ablation ---------------------------------------------------------------

struct AblateOptions {
    std::vector<int> ch_list = {2, 4, 6, 8, 10, 12, 14, 16};
    std::vector<uint64_t> seeds = {1, 2, 3};
    int epochs_mlp = 30;
    int epochs_unet = 8;
    double lr = 1e-3;
    double weight_decay = 1e-6;
    double augment_noise_var = 0.01;
    int base_width = 16;
};

struct AblationRow {
    int n_ch = 0;
    double overhead = 0.0;  // n_ch / 64
    MeanStd mlp;
    MeanStd unet;
};

// Trains both synthesis models per channel count and seed on a pooled split
// and reports twin-PPG MRAE on the test segments.
std::vector<AblationRow> ablate_channels(const std::vector<physio::SubjectData>& subjects,
                                         const AblateOptions& opt);

// ---- SDPPG features ------------------------------------------------------------

struct FiducialSet {
    // Sample indices into the analyzed signal and SDPPG amplitudes.
    std::array<int, 5> index{};       // a, b, c, d, e
    std::array<double, 5> amplitude{};
    double t_ab = 0.0, t_bc = 0.0, t_cd = 0.0, t_de = 0.0;  // seconds
    double agi = 0.0;  // (b - c - d - e) / a
};

double aging_index(double a, double b, double c, double d, double e);

// Second derivative after light smoothing; per detected beat the canonical
// a-b-c-d-e extrema sequence. Returns an empty list when no beat is found.
std::vector<FiducialSet> sdppg_features(const std::vector<double>& ppg, double rate);

// Second derivative via twice-applied central differences after a 5-point
// moving average; exposed for the feature tests.
std::vector<double> second_derivative(const std::vector<double>& x);

struct FeatureAgreement {
    // Per matched beat: absolute differences of the four intervals and AGI.
    std::vector<std::array<double, 5>> abs_diff;   // t_ab, t_bc, t_cd, t_de, agi
    std::vector<std::array<double, 5>> rel_diff;
    std::array<double, 5> median_abs{};
};

// Beat-matched interval/AGI comparison; throws when beat counts differ by
// more than one.
FeatureAgreement feature_agreement(const std::vector<double>& ref_ppg,
                                   const std::vector<double>& twin_ppg, double rate);

// ---- exports ---------------------------------------------------------------------

// CSV with header label,subject_id,v0..v449; one row per reference segment
// followed by one per twin.
void export_embeddings(const std::vector<SegmentPair>& pairs,
                       const std::vector<std::vector<double>>& twins,
                       const std::string& path);

// Per-segment mean vitals labels from the subject's 1 Hz records.
models::VitalsLabels segment_vitals_labels(
    const std::vector<SegmentPair>& pairs,
    const std::vector<physio::SubjectData>& subjects, double win_s = 2.5);

}  // namespace radiotwin::evalkit
