#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "radiotwin/autodiff.hpp"
#include "radiotwin/preprocess.hpp"

namespace radiotwin::models {

using ad::GeluMode;
using ad::Tensor;
using preprocess::SegmentPair;

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

// ---- layer building blocks -----------------------------------------------------

struct Linear {
    Tensor w, b;  // w is (in, out)
    Linear() = default;
    Linear(int in, int out, Rng& rng, const std::string& name);
    Tensor forward(const Tensor& x) const { return ad::linear(x, w, b); }
};

struct Conv {
    Tensor w, b;  // w is (out, in, k)
    Conv() = default;
    Conv(int in, int out, int k, Rng& rng, const std::string& name);
    Tensor forward(const Tensor& x) const { return ad::conv1d(x, w, b); }
};

// ---- DCT + MLP baseline ---------------------------------------------------------

// Six linear layers, GELU on all but the last, dropout per published table.
struct MlpSpec {
    int input_dim = 16 * 450;  // N_ch * N * K
    std::array<int, 5> hidden = {2048, 1024, 512, 512, 450};
    int output_dim = 450;
    std::array<double, 5> dropout = {0.05, 0.05, 0.1, 0.1, 0.15};
};

class MlpModel {
public:
    MlpModel(const MlpSpec& spec, uint64_t seed);
    Tensor forward(const Tensor& x, bool training, Rng& rng,
                   GeluMode mode = GeluMode::exact) const;
    NamedParams named_params() const;
    int64_t param_count() const;
    const MlpSpec& spec() const { return spec_; }

private:
    MlpSpec spec_;
    std::vector<Linear> fcs_;
};

// ---- U-NET approximation network ------------------------------------------------

struct UnetSpec {
    int in_channels = 32;
    int depth = 4;
    int base_width = 16;  // widths {w, 2w, 4w, 6w}, bottleneck 8w
    int kernel = 3;
    int pool = 2;
    int input_len = 450;
    int pad_to = 480;  // must be divisible by pool^depth

    std::vector<int> widths() const;
    int bottleneck_width() const { return 8 * base_width; }
    // Supervision level lengths, finest first: input_len / 2^(l-1).
    std::vector<int> level_lengths() const;
    void validate() const;
};

class UnetApprox {
public:
    UnetApprox(const UnetSpec& spec, uint64_t seed);
    // Levels finest-first: [ (b,450), (b,225), (b,112), (b,56) ] by default.
    std::vector<Tensor> forward(const Tensor& x, GeluMode mode = GeluMode::exact) const;
    NamedParams named_params() const;
    int64_t param_count() const;
    const UnetSpec& spec() const { return spec_; }

private:
    UnetSpec spec_;
    std::vector<Conv> enc1_, enc2_;      // two convs per encoder level
    Conv bott1_, bott2_;
    std::vector<Conv> up_, dec1_, dec2_;  // per decoder level, deepest first
    std::vector<Conv> heads_;             // 1x1 supervision heads, finest first
};

// ---- MultiRes refinement network -------------------------------------------------

struct MultiResSpec {
    int in_channels = 1;
    int depth = 4;
    int base_width = 16;
    int kernel = 3;
    int input_len = 450;
    int pad_to = 480;

    std::vector<int> widths() const;
    int bottleneck_width() const { return 8 * base_width; }
    // Conv units along each skip, finest first: depth, depth-1, ..., 1.
    std::vector<int> respath_lengths() const;
    // Factorized branch widths summing to `width`.
    static std::array<int, 3> branch_widths(int width);
};

class MultiResRefine {
public:
    MultiResRefine(const MultiResSpec& spec, uint64_t seed);
    Tensor forward(const Tensor& x, GeluMode mode = GeluMode::exact) const;  // (b, 450)
    NamedParams named_params() const;
    int64_t param_count() const;
    const MultiResSpec& spec() const { return spec_; }

private:
    struct MultiResBlock {
        Conv c1, c2, c3, shortcut;
        Tensor forward(const Tensor& x, GeluMode mode) const;
        void collect(const std::string& prefix, NamedParams& out) const;
    };
    struct ResPath {
        std::vector<Conv> conv3, conv1;
        Tensor forward(const Tensor& x, GeluMode mode) const;
        void collect(const std::string& prefix, NamedParams& out) const;
    };

    MultiResBlock make_block(int in, int width, Rng& rng, const std::string& name);

    MultiResSpec spec_;
    std::vector<MultiResBlock> enc_;
    MultiResBlock bott_;
    std::vector<ResPath> respaths_;  // finest first
    std::vector<Conv> up_;           // deepest first
    std::vector<MultiResBlock> dec_;
    Conv head_;
};

// ---- vitals estimator -------------------------------------------------------------

struct VitalsCnnSpec {
    int stages = 4;
    int base_channels = 16;  // doubling per stage after the first
    int input_len = 450;
};

class VitalsCnn {
public:
    VitalsCnn(const VitalsCnnSpec& spec, uint64_t seed);
    Tensor forward(const Tensor& x, GeluMode mode = GeluMode::exact) const;  // (b, 3)
    void init_head_bias(const std::array<double, 3>& means);
    NamedParams named_params() const;
    int64_t param_count() const;

private:
    VitalsCnnSpec spec_;
    Conv stem_;
    std::vector<Conv> main1_, main2_, shortcut_;
    Linear head_;
};

// ---- training ----------------------------------------------------------------------

enum class ModelKind { dct_mlp, unet_cascade, vitals_cnn };

std::string to_string(ModelKind kind);

struct TrainConfig {
    ModelKind model = ModelKind::unet_cascade;
    int epochs = 10;
    uint64_t seed = 1;
    double lr = 1e-4;
    double weight_decay = 1e-6;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    int batch_size = 32;
    GeluMode gelu_mode = GeluMode::exact;
    int k_streams = 1;         // dct_mlp input: 1 = magnitude, 2 = re/im
    bool joint_cascade = true; // false: approximation first, then refinement
    int base_width = 16;
};

struct EpochLog {
    int epoch;
    std::string split;  // "train" or "valid"
    double loss;
    double mae;
};

// Per-segment vitals labels (hr, spo2, rr) aligned with the pair list;
// required only for vitals_cnn training.
using VitalsLabels = std::vector<std::array<double, 3>>;

class TrainedModel {
public:
    ModelKind kind = ModelKind::unet_cascade;
    int k_streams = 1;
    GeluMode gelu_mode = GeluMode::exact;

    std::unique_ptr<MlpModel> mlp;
    std::unique_ptr<UnetApprox> approx;
    std::unique_ptr<MultiResRefine> refine;
    std::unique_ptr<VitalsCnn> vitals;

    // Twin PPG per pair, eval mode.
    std::vector<std::vector<double>> synthesize(const std::vector<SegmentPair>& pairs,
                                                const std::vector<int>& indices) const;
    std::vector<std::array<double, 3>> predict_vitals(
        const std::vector<SegmentPair>& pairs, const std::vector<int>& indices) const;

    NamedParams named_params() const;
    int64_t param_count() const;
};

struct TrainResult {
    std::shared_ptr<TrainedModel> model;
    std::vector<EpochLog> log;
    double final_train_loss = 0.0;
    double final_train_mae = 0.0;
};

// Batch-mode training with Adam; deterministic given the seed. Throws
// DivergenceError when the loss goes non-finite.
TrainResult train(const std::vector<SegmentPair>& pairs,
                  const std::vector<int>& train_idx,
                  const std::vector<int>& valid_idx, const TrainConfig& cfg,
                  const VitalsLabels* labels = nullptr);

// DCT-domain input row for one pair: per-channel DCT-II coefficients,
// magnitude (k_streams=1) or re/im (k_streams=2) representation.
std::vector<double> dct_input_row(const SegmentPair& pair, int k_streams);

// Decimated target used for level-l supervision (mean pooling by factor).
std::vector<double> decimate_mean(const std::vector<double>& x, int factor);

}  // namespace radiotwin::models
