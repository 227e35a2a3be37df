#include "radiotwin/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "radiotwin/errors.hpp"
#include "radiotwin/spectral.hpp"

namespace radiotwin::models {

namespace {

Tensor glorot(std::vector<int> shape, int fan_in, int fan_out, Rng& rng,
              const std::string& name) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<double> data(n);
    for (auto& v : data) v = rng.uniform(-limit, limit);
    Tensor t = Tensor::from_data(std::move(shape), std::move(data), true);
    t.set_name(name);
    return t;
}

Tensor zeros_param(std::vector<int> shape, const std::string& name) {
    Tensor t = Tensor::zeros(std::move(shape), true);
    t.set_name(name);
    return t;
}

void collect_linear(const Linear& l, const std::string& prefix, NamedParams& out) {
    out.emplace_back(prefix + ".w", l.w);
    out.emplace_back(prefix + ".b", l.b);
}

void collect_conv(const Conv& c, const std::string& prefix, NamedParams& out) {
    out.emplace_back(prefix + ".w", c.w);
    out.emplace_back(prefix + ".b", c.b);
}

int64_t count_params(const NamedParams& params) {
    int64_t n = 0;
    for (const auto& [name, t] : params) n += t.numel();
    return n;
}

}  // namespace

Linear::Linear(int in, int out, Rng& rng, const std::string& name)
    : w(glorot({in, out}, in, out, rng, name + ".w")),
      b(zeros_param({out}, name + ".b")) {}

Conv::Conv(int in, int out, int k, Rng& rng, const std::string& name)
    : w(glorot({out, in, k}, in * k, out * k, rng, name + ".w")),
      b(zeros_param({out}, name + ".b")) {}

// ---- MLP -------------------------------------------------------------------

MlpModel::MlpModel(const MlpSpec& spec, uint64_t seed) : spec_(spec) {
    Rng rng(Rng::derive(seed, 0xA1));
    int in = spec.input_dim;
    for (size_t i = 0; i < spec.hidden.size(); ++i) {
        fcs_.emplace_back(in, spec.hidden[i], rng, "fc" + std::to_string(i + 1));
        in = spec.hidden[i];
    }
    fcs_.emplace_back(in, spec.output_dim, rng,
                      "fc" + std::to_string(spec.hidden.size() + 1));
}

Tensor MlpModel::forward(const Tensor& x, bool training, Rng& rng,
                         GeluMode mode) const {
    Tensor h = x;
    for (size_t i = 0; i + 1 < fcs_.size(); ++i) {
        h = fcs_[i].forward(h);
        h = ad::dropout(h, spec_.dropout[i], training, rng);
        h = ad::gelu(h, mode);
    }
    return fcs_.back().forward(h);
}

NamedParams MlpModel::named_params() const {
    NamedParams out;
    for (size_t i = 0; i < fcs_.size(); ++i)
        collect_linear(fcs_[i], "fc" + std::to_string(i + 1), out);
    return out;
}

int64_t MlpModel::param_count() const { return count_params(named_params()); }

// ---- U-NET approximation -----------------------------------------------------

std::vector<int> UnetSpec::widths() const {
    std::vector<int> w(depth);
    for (int i = 0; i < depth; ++i)
        w[i] = std::min(base_width << i, 6 * base_width);
    return w;
}

std::vector<int> UnetSpec::level_lengths() const {
    std::vector<int> lens(depth);
    for (int l = 0; l < depth; ++l) lens[l] = input_len >> l;
    return lens;
}

void UnetSpec::validate() const {
    int p = 1;
    for (int i = 0; i < depth; ++i) p *= pool;
    if (pad_to % p != 0)
        throw std::invalid_argument("UnetSpec: pad_to must be divisible by pool^depth");
    if (pad_to < input_len)
        throw std::invalid_argument("UnetSpec: pad_to must be >= input_len");
    if (kernel % 2 == 0)
        throw std::invalid_argument("UnetSpec: kernel must be odd");
}

UnetApprox::UnetApprox(const UnetSpec& spec, uint64_t seed) : spec_(spec) {
    spec_.validate();
    Rng rng(Rng::derive(seed, 0xB2));
    const auto w = spec_.widths();
    int in = spec_.in_channels;
    for (int i = 0; i < spec_.depth; ++i) {
        enc1_.emplace_back(in, w[i], spec_.kernel, rng, "enc" + std::to_string(i + 1) + "a");
        enc2_.emplace_back(w[i], w[i], spec_.kernel, rng, "enc" + std::to_string(i + 1) + "b");
        in = w[i];
    }
    const int bw = spec_.bottleneck_width();
    bott1_ = Conv(in, bw, spec_.kernel, rng, "bott_a");
    bott2_ = Conv(bw, bw, spec_.kernel, rng, "bott_b");
    int prev = bw;
    for (int i = spec_.depth - 1; i >= 0; --i) {
        up_.emplace_back(prev, w[i], spec_.kernel, rng, "up" + std::to_string(i + 1));
        dec1_.emplace_back(2 * w[i], w[i], spec_.kernel, rng,
                           "dec" + std::to_string(i + 1) + "a");
        dec2_.emplace_back(w[i], w[i], spec_.kernel, rng,
                           "dec" + std::to_string(i + 1) + "b");
        prev = w[i];
    }
    for (int i = 0; i < spec_.depth; ++i)
        heads_.emplace_back(w[i], 1, 1, rng, "head" + std::to_string(i + 1));
}

std::vector<Tensor> UnetApprox::forward(const Tensor& x, GeluMode mode) const {
    if (x.rank() != 3 || x.dim(1) != spec_.in_channels || x.dim(2) != spec_.input_len)
        throw std::invalid_argument("UnetApprox: expected input (b," +
                                    std::to_string(spec_.in_channels) + "," +
                                    std::to_string(spec_.input_len) + ")");
    const int pad_total = spec_.pad_to - spec_.input_len;
    const int pad_left = pad_total / 2;
    Tensor cur = pad_total > 0
                     ? ad::reflect_pad1d(x, pad_left, pad_total - pad_left)
                     : x;

    std::vector<Tensor> skips(spec_.depth);
    for (int i = 0; i < spec_.depth; ++i) {
        Tensor e = ad::gelu(enc1_[i].forward(cur), mode);
        e = ad::gelu(enc2_[i].forward(e), mode);
        skips[i] = e;
        cur = ad::maxpool1d(e, spec_.pool);
    }
    cur = ad::gelu(bott1_.forward(cur), mode);
    cur = ad::gelu(bott2_.forward(cur), mode);

    std::vector<Tensor> levels(spec_.depth);
    const auto out_lens = spec_.level_lengths();
    for (int j = 0; j < spec_.depth; ++j) {
        const int i = spec_.depth - 1 - j;  // encoder level this stage mirrors
        cur = ad::upsample_nn1d(cur, spec_.pool);
        cur = ad::gelu(up_[j].forward(cur), mode);
        cur = ad::concat_channels(skips[i], cur);
        cur = ad::gelu(dec1_[j].forward(cur), mode);
        cur = ad::gelu(dec2_[j].forward(cur), mode);

        Tensor head = heads_[i].forward(cur);  // linear activation
        const int stage_len = spec_.pad_to >> i;
        const int crop_total = stage_len - out_lens[i];
        const int crop_left = crop_total / 2;
        if (crop_total > 0) head = ad::crop1d(head, crop_left, crop_total - crop_left);
        levels[i] = ad::reshape(head, {x.dim(0), out_lens[i]});
    }
    return levels;
}

NamedParams UnetApprox::named_params() const {
    NamedParams out;
    for (int i = 0; i < spec_.depth; ++i) {
        collect_conv(enc1_[i], "enc" + std::to_string(i + 1) + "a", out);
        collect_conv(enc2_[i], "enc" + std::to_string(i + 1) + "b", out);
    }
    collect_conv(bott1_, "bott_a", out);
    collect_conv(bott2_, "bott_b", out);
    for (int j = 0; j < spec_.depth; ++j) {
        const int i = spec_.depth - 1 - j;
        collect_conv(up_[j], "up" + std::to_string(i + 1), out);
        collect_conv(dec1_[j], "dec" + std::to_string(i + 1) + "a", out);
        collect_conv(dec2_[j], "dec" + std::to_string(i + 1) + "b", out);
    }
    for (int i = 0; i < spec_.depth; ++i)
        collect_conv(heads_[i], "head" + std::to_string(i + 1), out);
    return out;
}

int64_t UnetApprox::param_count() const { return count_params(named_params()); }

// ---- MultiRes refinement -------------------------------------------------------

std::vector<int> MultiResSpec::widths() const {
    std::vector<int> w(depth);
    for (int i = 0; i < depth; ++i)
        w[i] = std::min(base_width << i, 6 * base_width);
    return w;
}

std::vector<int> MultiResSpec::respath_lengths() const {
    std::vector<int> lens(depth);
    for (int i = 0; i < depth; ++i) lens[i] = depth - i;
    return lens;
}

std::array<int, 3> MultiResSpec::branch_widths(int width) {
    if (width < 3)
        throw std::invalid_argument("MultiResSpec: block width must be >= 3");
    const int w1 = std::max(1, width / 6);
    const int w2 = std::max(1, width / 3);
    return {w1, w2, width - w1 - w2};
}

MultiResRefine::MultiResBlock MultiResRefine::make_block(int in, int width, Rng& rng,
                                                         const std::string& name) {
    const auto bw = MultiResSpec::branch_widths(width);
    MultiResBlock b;
    b.c1 = Conv(in, bw[0], spec_.kernel, rng, name + ".c1");
    b.c2 = Conv(bw[0], bw[1], spec_.kernel, rng, name + ".c2");
    b.c3 = Conv(bw[1], bw[2], spec_.kernel, rng, name + ".c3");
    b.shortcut = Conv(in, width, 1, rng, name + ".sc");
    return b;
}

Tensor MultiResRefine::MultiResBlock::forward(const Tensor& x, GeluMode mode) const {
    Tensor b1 = ad::gelu(c1.forward(x), mode);
    Tensor b2 = ad::gelu(c2.forward(b1), mode);
    Tensor b3 = ad::gelu(c3.forward(b2), mode);
    Tensor cat = ad::concat_channels(ad::concat_channels(b1, b2), b3);
    return ad::gelu(ad::add(cat, shortcut.forward(x)), mode);
}

void MultiResRefine::MultiResBlock::collect(const std::string& prefix,
                                            NamedParams& out) const {
    collect_conv(c1, prefix + ".c1", out);
    collect_conv(c2, prefix + ".c2", out);
    collect_conv(c3, prefix + ".c3", out);
    collect_conv(shortcut, prefix + ".sc", out);
}

Tensor MultiResRefine::ResPath::forward(const Tensor& x, GeluMode mode) const {
    Tensor h = x;
    for (size_t i = 0; i < conv3.size(); ++i)
        h = ad::gelu(ad::add(conv3[i].forward(h), conv1[i].forward(h)), mode);
    return h;
}

void MultiResRefine::ResPath::collect(const std::string& prefix, NamedParams& out) const {
    for (size_t i = 0; i < conv3.size(); ++i) {
        collect_conv(conv3[i], prefix + ".u" + std::to_string(i + 1) + ".c3", out);
        collect_conv(conv1[i], prefix + ".u" + std::to_string(i + 1) + ".c1", out);
    }
}

MultiResRefine::MultiResRefine(const MultiResSpec& spec, uint64_t seed) : spec_(spec) {
    Rng rng(Rng::derive(seed, 0xC3));
    const auto w = spec_.widths();
    const auto rp_lens = spec_.respath_lengths();

    int in = spec_.in_channels;
    for (int i = 0; i < spec_.depth; ++i) {
        enc_.push_back(make_block(in, w[i], rng, "mb_enc" + std::to_string(i + 1)));
        in = w[i];
    }
    bott_ = make_block(in, spec_.bottleneck_width(), rng, "mb_bott");

    for (int i = 0; i < spec_.depth; ++i) {
        ResPath rp;
        for (int u = 0; u < rp_lens[i]; ++u) {
            const std::string base =
                "respath" + std::to_string(i + 1) + ".u" + std::to_string(u + 1);
            rp.conv3.emplace_back(w[i], w[i], spec_.kernel, rng, base + ".c3");
            rp.conv1.emplace_back(w[i], w[i], 1, rng, base + ".c1");
        }
        respaths_.push_back(std::move(rp));
    }

    int prev = spec_.bottleneck_width();
    for (int i = spec_.depth - 1; i >= 0; --i) {
        up_.emplace_back(prev, w[i], spec_.kernel, rng, "up" + std::to_string(i + 1));
        dec_.push_back(make_block(2 * w[i], w[i], rng, "mb_dec" + std::to_string(i + 1)));
        prev = w[i];
    }
    head_ = Conv(w[0], 1, 1, rng, "head");
}

Tensor MultiResRefine::forward(const Tensor& x, GeluMode mode) const {
    if (x.rank() != 3 || x.dim(1) != spec_.in_channels || x.dim(2) != spec_.input_len)
        throw std::invalid_argument("MultiResRefine: expected input (b," +
                                    std::to_string(spec_.in_channels) + "," +
                                    std::to_string(spec_.input_len) + ")");
    const int pad_total = spec_.pad_to - spec_.input_len;
    const int pad_left = pad_total / 2;
    Tensor cur = pad_total > 0
                     ? ad::reflect_pad1d(x, pad_left, pad_total - pad_left)
                     : x;

    std::vector<Tensor> skips(spec_.depth);
    for (int i = 0; i < spec_.depth; ++i) {
        cur = enc_[i].forward(cur, mode);
        skips[i] = respaths_[i].forward(cur, mode);
        cur = ad::maxpool1d(cur, 2);
    }
    cur = bott_.forward(cur, mode);

    for (int j = 0; j < spec_.depth; ++j) {
        const int i = spec_.depth - 1 - j;
        cur = ad::upsample_nn1d(cur, 2);
        cur = ad::gelu(up_[j].forward(cur), mode);
        cur = ad::concat_channels(skips[i], cur);
        cur = dec_[j].forward(cur, mode);
    }
    Tensor out = head_.forward(cur);  // linear activation
    if (pad_total > 0) out = ad::crop1d(out, pad_left, pad_total - pad_left);
    return ad::reshape(out, {x.dim(0), spec_.input_len});
}

NamedParams MultiResRefine::named_params() const {
    NamedParams out;
    for (int i = 0; i < spec_.depth; ++i)
        enc_[i].collect("mb_enc" + std::to_string(i + 1), out);
    bott_.collect("mb_bott", out);
    for (int i = 0; i < spec_.depth; ++i)
        respaths_[i].collect("respath" + std::to_string(i + 1), out);
    for (int j = 0; j < spec_.depth; ++j) {
        const int i = spec_.depth - 1 - j;
        collect_conv(up_[j], "up" + std::to_string(i + 1), out);
        dec_[j].collect("mb_dec" + std::to_string(i + 1), out);
    }
    collect_conv(head_, "head", out);
    return out;
}

int64_t MultiResRefine::param_count() const { return count_params(named_params()); }

// ---- vitals CNN ------------------------------------------------------------------

VitalsCnn::VitalsCnn(const VitalsCnnSpec& spec, uint64_t seed) : spec_(spec) {
    Rng rng(Rng::derive(seed, 0xD4));
    stem_ = Conv(1, spec.base_channels, 3, rng, "stem");
    int in = spec.base_channels;
    for (int s = 0; s < spec.stages; ++s) {
        const int out = s == 0 ? spec.base_channels : in * 2;
        main1_.emplace_back(in, out, 3, rng, "stage" + std::to_string(s + 1) + ".c1");
        main2_.emplace_back(out, out, 3, rng, "stage" + std::to_string(s + 1) + ".c2");
        shortcut_.emplace_back(in, out, 1, rng, "stage" + std::to_string(s + 1) + ".sc");
        in = out;
    }
    head_ = Linear(in, 3, rng, "head");
}

Tensor VitalsCnn::forward(const Tensor& x, GeluMode mode) const {
    if (x.rank() != 3 || x.dim(1) != 1 || x.dim(2) != spec_.input_len)
        throw std::invalid_argument("VitalsCnn: expected input (b,1," +
                                    std::to_string(spec_.input_len) + ")");
    Tensor cur = ad::gelu(stem_.forward(x), mode);
    for (size_t s = 0; s < main1_.size(); ++s) {
        Tensor m = ad::gelu(main1_[s].forward(cur), mode);
        m = main2_[s].forward(m);
        cur = ad::gelu(ad::add(m, shortcut_[s].forward(cur)), mode);
        cur = ad::maxpool1d(cur, 2);
    }
    // Global average pool, then the regression head in natural units.
    cur = ad::avgpool1d(cur, cur.dim(2));
    cur = ad::reshape(cur, {x.dim(0), cur.dim(1)});
    return head_.forward(cur);
}

void VitalsCnn::init_head_bias(const std::array<double, 3>& means) {
    for (int j = 0; j < 3; ++j) head_.b.data()[j] = means[j];
}

NamedParams VitalsCnn::named_params() const {
    NamedParams out;
    collect_conv(stem_, "stem", out);
    for (size_t s = 0; s < main1_.size(); ++s) {
        collect_conv(main1_[s], "stage" + std::to_string(s + 1) + ".c1", out);
        collect_conv(main2_[s], "stage" + std::to_string(s + 1) + ".c2", out);
        collect_conv(shortcut_[s], "stage" + std::to_string(s + 1) + ".sc", out);
    }
    collect_linear(head_, "head", out);
    return out;
}

int64_t VitalsCnn::param_count() const { return count_params(named_params()); }

// ---- data plumbing ------------------------------------------------------------------

std::vector<double> decimate_mean(const std::vector<double>& x, int factor) {
    const size_t out_len = x.size() / factor;
    std::vector<double> out(out_len);
    for (size_t i = 0; i < out_len; ++i) {
        double acc = 0.0;
        for (int j = 0; j < factor; ++j) acc += x[i * factor + j];
        out[i] = acc / factor;
    }
    return out;
}

std::vector<double> dct_input_row(const SegmentPair& pair, int k_streams) {
    const int n_ch = pair.radio.rows / 2;
    const int len = pair.radio.cols;
    std::vector<double> row;
    if (k_streams == 1) {
        // Magnitude of the stored (z-scored) complex rows, re-standardized
        // per channel before the transform.
        row.reserve(static_cast<size_t>(n_ch) * len);
        std::vector<double> mag(len);
        for (int c = 0; c < n_ch; ++c) {
            const double* re = pair.radio.row(c);
            const double* im = pair.radio.row(n_ch + c);
            double mean = 0.0;
            for (int t = 0; t < len; ++t) {
                mag[t] = std::hypot(re[t], im[t]);
                mean += mag[t];
            }
            mean /= len;
            double var = 0.0;
            for (int t = 0; t < len; ++t) var += (mag[t] - mean) * (mag[t] - mean);
            var /= len;
            const double inv_std = var > 1e-24 ? 1.0 / std::sqrt(var) : 0.0;
            for (int t = 0; t < len; ++t) mag[t] = (mag[t] - mean) * inv_std;
            const auto coeffs = spectral::dct2(mag);
            row.insert(row.end(), coeffs.begin(), coeffs.end());
        }
    } else if (k_streams == 2) {
        row.reserve(static_cast<size_t>(pair.radio.rows) * len);
        std::vector<double> buf(len);
        for (int r = 0; r < pair.radio.rows; ++r) {
            buf.assign(pair.radio.row(r), pair.radio.row(r) + len);
            const auto coeffs = spectral::dct2(buf);
            row.insert(row.end(), coeffs.begin(), coeffs.end());
        }
    } else {
        throw std::invalid_argument("dct_input_row: k_streams must be 1 or 2");
    }
    return row;
}

// ---- training -------------------------------------------------------------------------

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::dct_mlp: return "dct_mlp";
        case ModelKind::unet_cascade: return "unet_cascade";
        case ModelKind::vitals_cnn: return "vitals_cnn";
    }
    return "?";
}

namespace {

Tensor radio_batch(const std::vector<SegmentPair>& pairs, const std::vector<int>& idx,
                   size_t lo, size_t hi) {
    const int c = pairs[idx[lo]].radio.rows;
    const int len = pairs[idx[lo]].radio.cols;
    const int b = static_cast<int>(hi - lo);
    std::vector<double> data(static_cast<size_t>(b) * c * len);
    for (size_t i = lo; i < hi; ++i)
        std::copy(pairs[idx[i]].radio.data.begin(), pairs[idx[i]].radio.data.end(),
                  data.begin() + (i - lo) * static_cast<size_t>(c) * len);
    return Tensor::from_data({b, c, len}, std::move(data));
}

Tensor ppg_batch(const std::vector<SegmentPair>& pairs, const std::vector<int>& idx,
                 size_t lo, size_t hi, int factor) {
    const int b = static_cast<int>(hi - lo);
    const int len = static_cast<int>(pairs[idx[lo]].ppg.size()) / factor;
    std::vector<double> data(static_cast<size_t>(b) * len);
    for (size_t i = lo; i < hi; ++i) {
        const auto dec = factor == 1 ? pairs[idx[i]].ppg
                                     : decimate_mean(pairs[idx[i]].ppg, factor);
        std::copy(dec.begin(), dec.end(), data.begin() + (i - lo) * static_cast<size_t>(len));
    }
    return Tensor::from_data({b, len}, std::move(data));
}

double batch_mae(const Tensor& pred, const Tensor& target) {
    double acc = 0.0;
    for (int64_t i = 0; i < pred.numel(); ++i)
        acc += std::abs(pred.data()[i] - target.data()[i]);
    return acc / pred.numel();
}

struct VitalsScaling {
    Tensor weight;           // constant (3,3) diagonal 1/scale
    std::array<double, 3> means{};
    std::array<double, 3> scales{};
};

VitalsScaling vitals_scaling(const VitalsLabels& labels, const std::vector<int>& idx) {
    VitalsScaling s;
    for (int j = 0; j < 3; ++j) {
        double mean = 0.0;
        for (int i : idx) mean += labels[i][j];
        mean /= idx.empty() ? 1 : idx.size();
        s.means[j] = mean;
        s.scales[j] = std::max(1e-6, std::abs(mean));
    }
    std::vector<double> w(9, 0.0);
    for (int j = 0; j < 3; ++j) w[j * 3 + j] = 1.0 / s.scales[j];
    s.weight = Tensor::from_data({3, 3}, std::move(w));
    return s;
}

Tensor vitals_label_batch(const VitalsLabels& labels, const std::vector<int>& idx,
                          size_t lo, size_t hi, const VitalsScaling& s) {
    const int b = static_cast<int>(hi - lo);
    std::vector<double> data(static_cast<size_t>(b) * 3);
    for (size_t i = lo; i < hi; ++i)
        for (int j = 0; j < 3; ++j)
            data[(i - lo) * 3 + j] = labels[idx[i]][j] / s.scales[j];
    return Tensor::from_data({b, 3}, std::move(data));
}

}  // namespace

std::vector<std::vector<double>> TrainedModel::synthesize(
    const std::vector<SegmentPair>& pairs, const std::vector<int>& indices) const {
    std::vector<std::vector<double>> out;
    out.reserve(indices.size());
    Rng dummy(0);
    for (size_t lo = 0; lo < indices.size(); lo += 32) {
        const size_t hi = std::min(indices.size(), lo + 32);
        Tensor twin;
        if (kind == ModelKind::dct_mlp) {
            const int b = static_cast<int>(hi - lo);
            std::vector<double> rows;
            int in_dim = 0;
            for (size_t i = lo; i < hi; ++i) {
                auto r = dct_input_row(pairs[indices[i]], k_streams);
                in_dim = static_cast<int>(r.size());
                rows.insert(rows.end(), r.begin(), r.end());
            }
            Tensor x = Tensor::from_data({b, in_dim}, std::move(rows));
            twin = ad::idct2_rows(mlp->forward(x, false, dummy, gelu_mode));
        } else if (kind == ModelKind::unet_cascade) {
            Tensor x = radio_batch(pairs, indices, lo, hi);
            auto levels = approx->forward(x, gelu_mode);
            Tensor r = ad::reshape(levels[0], {x.dim(0), 1, levels[0].dim(1)});
            twin = refine->forward(r, gelu_mode);
        } else {
            throw std::invalid_argument("synthesize: not a synthesis model");
        }
        for (int bi = 0; bi < twin.dim(0); ++bi)
            out.emplace_back(twin.data() + static_cast<size_t>(bi) * twin.dim(1),
                             twin.data() + static_cast<size_t>(bi + 1) * twin.dim(1));
    }
    return out;
}

std::vector<std::array<double, 3>> TrainedModel::predict_vitals(
    const std::vector<SegmentPair>& pairs, const std::vector<int>& indices) const {
    if (!vitals) throw std::invalid_argument("predict_vitals: no vitals model");
    std::vector<std::array<double, 3>> out;
    out.reserve(indices.size());
    for (size_t lo = 0; lo < indices.size(); lo += 32) {
        const size_t hi = std::min(indices.size(), lo + 32);
        const int b = static_cast<int>(hi - lo);
        const int len = static_cast<int>(pairs[indices[lo]].ppg.size());
        std::vector<double> data(static_cast<size_t>(b) * len);
        for (size_t i = lo; i < hi; ++i)
            std::copy(pairs[indices[i]].ppg.begin(), pairs[indices[i]].ppg.end(),
                      data.begin() + (i - lo) * static_cast<size_t>(len));
        Tensor x = Tensor::from_data({b, 1, len}, std::move(data));
        Tensor y = vitals->forward(x, gelu_mode);
        for (int bi = 0; bi < b; ++bi)
            out.push_back({y.data()[bi * 3], y.data()[bi * 3 + 1], y.data()[bi * 3 + 2]});
    }
    return out;
}

NamedParams TrainedModel::named_params() const {
    NamedParams out;
    auto prefix_into = [&out](const std::string& prefix, const NamedParams& src) {
        for (const auto& [name, t] : src) out.emplace_back(prefix + name, t);
    };
    if (mlp) prefix_into("mlp.", mlp->named_params());
    if (approx) prefix_into("approx.", approx->named_params());
    if (refine) prefix_into("refine.", refine->named_params());
    if (vitals) prefix_into("vitals.", vitals->named_params());
    return out;
}

int64_t TrainedModel::param_count() const { return count_params(named_params()); }

TrainResult train(const std::vector<SegmentPair>& pairs,
                  const std::vector<int>& train_idx,
                  const std::vector<int>& valid_idx, const TrainConfig& cfg,
                  const VitalsLabels* labels) {
    if (train_idx.empty()) throw std::invalid_argument("train: empty train split");
    if (cfg.model == ModelKind::vitals_cnn && !labels)
        throw std::invalid_argument("train: vitals_cnn requires labels");

    TrainResult result;
    result.model = std::make_shared<TrainedModel>();
    auto& model = *result.model;
    model.kind = cfg.model;
    model.k_streams = cfg.k_streams;
    model.gelu_mode = cfg.gelu_mode;

    const auto& first = pairs[train_idx[0]];
    const int channels = first.radio.rows;
    const int seg_len = static_cast<int>(first.ppg.size());

    // Cache of DCT-domain inputs, built on demand.
    std::vector<std::vector<double>> dct_cache;

    if (cfg.model == ModelKind::dct_mlp) {
        MlpSpec spec;
        spec.input_dim = (cfg.k_streams == 1 ? channels / 2 : channels) * seg_len;
        model.mlp = std::make_unique<MlpModel>(spec, cfg.seed);
        dct_cache.resize(pairs.size());
    } else if (cfg.model == ModelKind::unet_cascade) {
        UnetSpec uspec;
        uspec.in_channels = channels;
        uspec.base_width = cfg.base_width;
        uspec.input_len = seg_len;
        model.approx = std::make_unique<UnetApprox>(uspec, cfg.seed);
        MultiResSpec rspec;
        rspec.base_width = cfg.base_width;
        rspec.input_len = seg_len;
        model.refine = std::make_unique<MultiResRefine>(rspec, Rng::derive(cfg.seed, 2));
    } else {
        VitalsCnnSpec vspec;
        vspec.input_len = seg_len;
        model.vitals = std::make_unique<VitalsCnn>(vspec, cfg.seed);
    }

    VitalsScaling vscale;
    if (cfg.model == ModelKind::vitals_cnn) {
        vscale = vitals_scaling(*labels, train_idx);
        model.vitals->init_head_bias(vscale.means);
    }

    auto named = model.named_params();
    std::vector<Tensor> params;
    params.reserve(named.size());
    for (auto& [name, t] : named) params.push_back(t);
    ad::AdamOptimizer opt(params, cfg.lr, cfg.weight_decay);

    auto dct_input_batch = [&](const std::vector<int>& idx, size_t lo, size_t hi) {
        const int b = static_cast<int>(hi - lo);
        int in_dim = 0;
        std::vector<double> rows;
        for (size_t i = lo; i < hi; ++i) {
            auto& cached = dct_cache[idx[i]];
            if (cached.empty()) cached = dct_input_row(pairs[idx[i]], cfg.k_streams);
            in_dim = static_cast<int>(cached.size());
            rows.insert(rows.end(), cached.begin(), cached.end());
        }
        return Tensor::from_data({b, in_dim}, std::move(rows));
    };

    Rng dropout_rng(Rng::derive(cfg.seed, 0xF00D));

    // Evaluates loss and MAE over a split without dropout; also used for the
    // train metrics reported at the end of each epoch.
    auto evaluate = [&](const std::vector<int>& idx) -> std::pair<double, double> {
        if (idx.empty()) return {0.0, 0.0};
        double loss_acc = 0.0, mae_acc = 0.0;
        int64_t batches = 0;
        Rng dummy(0);
        for (size_t lo = 0; lo < idx.size(); lo += cfg.batch_size) {
            const size_t hi = std::min(idx.size(), lo + cfg.batch_size);
            Tensor loss, pred, target;
            if (cfg.model == ModelKind::dct_mlp) {
                Tensor x = dct_input_batch(idx, lo, hi);
                target = ppg_batch(pairs, idx, lo, hi, 1);
                pred = ad::idct2_rows(model.mlp->forward(x, false, dummy, cfg.gelu_mode));
                loss = ad::loss_mae(pred, target);
            } else if (cfg.model == ModelKind::unet_cascade) {
                Tensor x = radio_batch(pairs, idx, lo, hi);
                auto levels = model.approx->forward(x, cfg.gelu_mode);
                std::vector<Tensor> targets;
                for (size_t l = 0; l < levels.size(); ++l)
                    targets.push_back(ppg_batch(pairs, idx, lo, hi, 1 << l));
                Tensor l1 = ad::loss_deep_l1(levels, targets, cfg.lambda1, cfg.lambda2);
                Tensor rin = ad::reshape(levels[0], {x.dim(0), 1, levels[0].dim(1)});
                pred = model.refine->forward(rin, cfg.gelu_mode);
                target = targets[0];
                Tensor l2 = ad::loss_refine_l2(pred, target, cfg.lambda1, cfg.lambda2);
                loss = ad::add(l1, l2);
            } else {
                const int b = static_cast<int>(hi - lo);
                std::vector<double> data(static_cast<size_t>(b) * seg_len);
                for (size_t i = lo; i < hi; ++i)
                    std::copy(pairs[idx[i]].ppg.begin(), pairs[idx[i]].ppg.end(),
                              data.begin() + (i - lo) * static_cast<size_t>(seg_len));
                Tensor x = Tensor::from_data({b, 1, seg_len}, std::move(data));
                pred = ad::linear(model.vitals->forward(x, cfg.gelu_mode), vscale.weight,
                                  Tensor());
                target = vitals_label_batch(*labels, idx, lo, hi, vscale);
                loss = ad::loss_mae(pred, target);
            }
            loss_acc += loss.value();
            mae_acc += batch_mae(pred, target);
            ++batches;
        }
        return {loss_acc / batches, mae_acc / batches};
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<int> order = train_idx;
        Rng shuffle_rng(Rng::derive(cfg.seed, 100 + epoch));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.index(i)]);

        // Sequential cascade mode: approximation for the first half of the
        // epochs, refinement (with frozen approximation) for the second.
        const bool train_approx =
            cfg.joint_cascade || epoch < (cfg.epochs + 1) / 2;

        double loss_acc = 0.0, mae_acc = 0.0;
        int64_t batches = 0;
        for (size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
            const size_t hi = std::min(order.size(), lo + cfg.batch_size);
            Tensor loss, pred, target;
            if (cfg.model == ModelKind::dct_mlp) {
                Tensor x = dct_input_batch(order, lo, hi);
                target = ppg_batch(pairs, order, lo, hi, 1);
                pred = ad::idct2_rows(
                    model.mlp->forward(x, true, dropout_rng, cfg.gelu_mode));
                loss = ad::loss_mae(pred, target);
            } else if (cfg.model == ModelKind::unet_cascade) {
                Tensor x = radio_batch(pairs, order, lo, hi);
                auto levels = model.approx->forward(x, cfg.gelu_mode);
                std::vector<Tensor> targets;
                for (size_t l = 0; l < levels.size(); ++l)
                    targets.push_back(ppg_batch(pairs, order, lo, hi, 1 << l));
                target = targets[0];
                if (cfg.joint_cascade) {
                    Tensor l1 = ad::loss_deep_l1(levels, targets, cfg.lambda1, cfg.lambda2);
                    Tensor rin = ad::reshape(levels[0], {x.dim(0), 1, levels[0].dim(1)});
                    pred = model.refine->forward(rin, cfg.gelu_mode);
                    loss = ad::add(l1,
                                   ad::loss_refine_l2(pred, target, cfg.lambda1, cfg.lambda2));
                } else if (train_approx) {
                    loss = ad::loss_deep_l1(levels, targets, cfg.lambda1, cfg.lambda2);
                    pred = levels[0];
                } else {
                    Tensor detached = Tensor::from_data(
                        {x.dim(0), 1, levels[0].dim(1)}, levels[0].vec());
                    pred = model.refine->forward(detached, cfg.gelu_mode);
                    loss = ad::loss_refine_l2(pred, target, cfg.lambda1, cfg.lambda2);
                }
            } else {
                const int b = static_cast<int>(hi - lo);
                std::vector<double> data(static_cast<size_t>(b) * seg_len);
                for (size_t i = lo; i < hi; ++i)
                    std::copy(pairs[order[i]].ppg.begin(), pairs[order[i]].ppg.end(),
                              data.begin() + (i - lo) * static_cast<size_t>(seg_len));
                Tensor x = Tensor::from_data({b, 1, seg_len}, std::move(data));
                pred = ad::linear(model.vitals->forward(x, cfg.gelu_mode), vscale.weight,
                                  Tensor());
                target = vitals_label_batch(*labels, order, lo, hi, vscale);
                loss = ad::loss_mae(pred, target);
            }
            if (!std::isfinite(loss.value()))
                throw DivergenceError("train: non-finite loss at epoch " +
                                      std::to_string(epoch) + ", batch " +
                                      std::to_string(batches) + " (" +
                                      to_string(cfg.model) + ")");
            opt.zero_grad();
            loss.backward();
            opt.step();
            loss_acc += loss.value();
            mae_acc += batch_mae(pred, target);
            ++batches;
        }
        result.final_train_loss = loss_acc / batches;
        result.final_train_mae = mae_acc / batches;
        result.log.push_back({epoch, "train", result.final_train_loss,
                              result.final_train_mae});
        if (!valid_idx.empty()) {
            auto [vl, vm] = evaluate(valid_idx);
            result.log.push_back({epoch, "valid", vl, vm});
        }
    }
    return result;
}

}  // namespace radiotwin::models
