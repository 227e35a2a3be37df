#include "radiotwin/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "radiotwin/rng.hpp"

namespace radiotwin::evalkit {

namespace {

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    for (double v : xs) out.mean += v;
    out.mean /= xs.size();
    double var = 0.0;
    for (double v : xs) var += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(var / xs.size());
    return out;
}

double median(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

Histogram make_histogram(const std::vector<double>& values, int bins) {
    Histogram h;
    h.counts.assign(bins, 0);
    h.edges.resize(bins + 1);
    if (values.empty()) {
        for (int i = 0; i <= bins; ++i) h.edges[i] = i;
        return h;
    }
    auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
    double lo = *mn_it, hi = *mx_it;
    if (hi <= lo) hi = lo + 1e-12;
    for (int i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * i / bins;
    for (double v : values) {
        int b = static_cast<int>((v - lo) / (hi - lo) * bins);
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[b];
    }
    return h;
}

}  // namespace

SplitPlan make_split(const std::vector<SegmentPair>& pairs, SplitKind kind,
                     uint64_t seed) {
    SplitPlan plan;
    plan.kind = kind;
    plan.seed = seed;

    using Key = std::pair<std::string, int64_t>;
    std::vector<int> original_idx;
    for (size_t i = 0; i < pairs.size(); ++i)
        if (!pairs[i].augmented) original_idx.push_back(static_cast<int>(i));

    if (kind == SplitKind::pooled) {
        std::vector<int> shuffled = original_idx;
        Rng rng(Rng::derive(seed, 0x5917));
        for (size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[rng.index(i)]);
        const size_t n_train = shuffled.size() * 4 / 5;
        std::map<Key, bool> side;  // true = train
        for (size_t i = 0; i < shuffled.size(); ++i) {
            const auto& p = pairs[shuffled[i]];
            side[{p.subject_id, p.segment_index}] = i < n_train;
        }
        for (size_t i = 0; i < pairs.size(); ++i) {
            const auto& p = pairs[i];
            const auto it = side.find({p.subject_id, p.segment_index});
            if (it == side.end()) continue;
            (it->second ? plan.train_idx : plan.test_idx).push_back(static_cast<int>(i));
        }
        return plan;
    }

    // LTSO: pairs of held-out subjects, each subject in exactly one test fold.
    std::set<std::string> subject_set;
    for (const auto& p : pairs) subject_set.insert(p.subject_id);
    std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
    if (subjects.size() < 4)
        throw std::invalid_argument("make_split: ltso requires at least 4 subjects");
    if (subjects.size() % 2 != 0)
        throw std::invalid_argument(
            "make_split: ltso requires an even subject count to form "
            "two-subject folds; got " + std::to_string(subjects.size()));
    Rng rng(Rng::derive(seed, 0x17D0));
    for (size_t i = subjects.size(); i > 1; --i)
        std::swap(subjects[i - 1], subjects[rng.index(i)]);

    for (size_t f = 0; f * 2 < subjects.size(); ++f) {
        SplitPlan::Fold fold;
        fold.held_out = {subjects[2 * f], subjects[2 * f + 1]};
        for (size_t i = 0; i < pairs.size(); ++i) {
            const bool held = pairs[i].subject_id == fold.held_out[0] ||
                              pairs[i].subject_id == fold.held_out[1];
            (held ? fold.test_idx : fold.train_idx).push_back(static_cast<int>(i));
        }
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

MetricsReport reconstruction_metrics(const std::vector<std::vector<double>>& preds,
                                     const std::vector<std::vector<double>>& targets,
                                     int bins) {
    if (preds.size() != targets.size())
        throw std::invalid_argument("reconstruction_metrics: batch size mismatch");
    MetricsReport r;
    r.segment_mae.reserve(preds.size());
    r.segment_mse.reserve(preds.size());
    for (size_t s = 0; s < preds.size(); ++s) {
        if (preds[s].size() != targets[s].size())
            throw std::invalid_argument("reconstruction_metrics: segment " +
                                        std::to_string(s) + " length mismatch");
        double mae = 0.0, mse = 0.0;
        for (size_t i = 0; i < preds[s].size(); ++i) {
            const double e = preds[s][i] - targets[s][i];
            mae += std::abs(e);
            mse += e * e;
        }
        r.segment_mae.push_back(mae / preds[s].size());
        r.segment_mse.push_back(mse / preds[s].size());
    }
    const auto mae_ms = mean_std(r.segment_mae);
    const auto mse_ms = mean_std(r.segment_mse);
    r.mae_mean = mae_ms.mean;
    r.mae_std = mae_ms.std;
    r.mae_median = median(r.segment_mae);
    r.mse_mean = mse_ms.mean;
    r.mse_std = mse_ms.std;
    r.rmse = std::sqrt(r.mse_mean);
    r.histogram = make_histogram(r.segment_mae, bins);
    return r;
}

Histogram pointwise_error_histogram(const std::vector<std::vector<double>>& preds,
                                    const std::vector<std::vector<double>>& targets,
                                    int bins) {
    std::vector<double> errors;
    for (size_t s = 0; s < preds.size(); ++s)
        for (size_t i = 0; i < preds[s].size(); ++i)
            errors.push_back(preds[s][i] - targets[s][i]);
    return make_histogram(errors, bins);
}

double mrae(const std::vector<double>& truth, const std::vector<double>& measured) {
    if (truth.size() != measured.size() || truth.empty())
        throw std::invalid_argument("mrae: need equal nonzero lengths");
    double acc = 0.0;
    for (size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 0.0)
            throw std::invalid_argument("mrae: zero true value at index " +
                                        std::to_string(i));
        acc += std::abs(truth[i] - measured[i]) / std::abs(truth[i]);
    }
    return acc / truth.size();
}

double mrsd(const std::vector<double>& truth, const std::vector<double>& stds) {
    if (truth.size() != stds.size() || truth.empty())
        throw std::invalid_argument("mrsd: need equal nonzero lengths");
    double acc = 0.0;
    for (size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 0.0)
            throw std::invalid_argument("mrsd: zero true value at index " +
                                        std::to_string(i));
        if (stds[i] < 0.0)
            throw std::invalid_argument("mrsd: negative std at index " +
                                        std::to_string(i));
        acc += stds[i] / std::abs(truth[i]);
    }
    return acc / truth.size();
}

double segment_rae(const std::vector<double>& ref, const std::vector<double>& twin) {
    if (ref.size() != twin.size())
        throw std::invalid_argument("segment_rae: length mismatch");
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < ref.size(); ++i) {
        num += std::abs(ref[i] - twin[i]);
        den += std::abs(ref[i]);
    }
    if (den == 0.0) throw std::invalid_argument("segment_rae: all-zero reference");
    return num / den;
}

MeanStd waveform_mrae(const std::vector<std::vector<double>>& refs,
                      const std::vector<std::vector<double>>& twins) {
    std::vector<double> raes;
    raes.reserve(refs.size());
    for (size_t i = 0; i < refs.size(); ++i)
        raes.push_back(segment_rae(refs[i], twins[i]));
    return mean_std(raes);
}

std::vector<AblationRow> ablate_channels(const std::vector<physio::SubjectData>& subjects,
                                         const AblateOptions& opt) {
    if (subjects.size() < 4)
        throw std::invalid_argument("ablate_channels: need at least 4 subjects");
    std::vector<AblationRow> rows;
    for (int n_ch : opt.ch_list) {
        std::vector<double> mlp_runs, unet_runs;
        for (uint64_t seed : opt.seeds) {
            preprocess::BuildOptions bopt;
            bopt.n_ch = n_ch;
            std::vector<SegmentPair> pairs;
            for (const auto& s : subjects) {
                auto p = preprocess::build_pairs(s.radio, s.ppg, bopt);
                pairs.insert(pairs.end(), p.begin(), p.end());
            }
            pairs = preprocess::augment(pairs, opt.augment_noise_var,
                                        Rng::derive(seed, 0xA06));
            const auto plan = make_split(pairs, SplitKind::pooled, seed);

            std::vector<std::vector<double>> test_targets;
            for (int i : plan.test_idx) test_targets.push_back(pairs[i].ppg);

            for (int which = 0; which < 2; ++which) {
                models::TrainConfig tc;
                tc.model = which == 0 ? models::ModelKind::dct_mlp
                                      : models::ModelKind::unet_cascade;
                tc.epochs = which == 0 ? opt.epochs_mlp : opt.epochs_unet;
                tc.seed = seed;
                tc.lr = opt.lr;
                tc.weight_decay = opt.weight_decay;
                tc.base_width = opt.base_width;
                auto result = models::train(pairs, plan.train_idx, plan.test_idx, tc);
                const auto twins = result.model->synthesize(pairs, plan.test_idx);
                const auto ms = waveform_mrae(test_targets, twins);
                (which == 0 ? mlp_runs : unet_runs).push_back(ms.mean);
            }
        }
        AblationRow row;
        row.n_ch = n_ch;
        row.overhead = n_ch / 64.0;
        row.mlp = mean_std(mlp_runs);
        row.unet = mean_std(unet_runs);
        rows.push_back(row);
    }
    return rows;
}

// ---- SDPPG ------------------------------------------------------------------------

double aging_index(double a, double b, double c, double d, double e) {
    if (a == 0.0) throw std::invalid_argument("aging_index: a amplitude is zero");
    return (b - c - d - e) / a;
}

namespace {

std::vector<double> moving_average5(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        int cnt = 0;
        for (int j = std::max(0, i - 2); j <= std::min(n - 1, i + 2); ++j) {
            acc += x[j];
            ++cnt;
        }
        out[i] = acc / cnt;
    }
    return out;
}

std::vector<double> central_diff(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    std::vector<double> out(n, 0.0);
    for (int i = 1; i + 1 < n; ++i) out[i] = 0.5 * (x[i + 1] - x[i - 1]);
    if (n >= 2) {
        out[0] = x[1] - x[0];
        out[n - 1] = x[n - 1] - x[n - 2];
    }
    return out;
}

// Systolic peaks: prominent strict local maxima with a refractory window.
std::vector<int> detect_peaks(const std::vector<double>& x, double rate) {
    const int n = static_cast<int>(x.size());
    if (n < 3) return {};
    const double hi = *std::max_element(x.begin(), x.end());
    const double lo = *std::min_element(x.begin(), x.end());
    const double threshold = lo + 0.5 * (hi - lo);
    const int refractory = std::max(1, static_cast<int>(0.33 * rate));
    std::vector<int> peaks;
    for (int i = 1; i + 1 < n; ++i) {
        if (x[i] <= threshold || x[i] < x[i - 1] || x[i] <= x[i + 1]) continue;
        if (!peaks.empty() && i - peaks.back() < refractory) {
            if (x[i] > x[peaks.back()]) peaks.back() = i;
            continue;
        }
        peaks.push_back(i);
    }
    return peaks;
}

int next_extremum(const std::vector<double>& sd, int from, int end, bool maximum) {
    for (int i = from + 1; i < end - 1; ++i) {
        const bool is_ext = maximum ? (sd[i] > sd[i - 1] && sd[i] >= sd[i + 1])
                                    : (sd[i] < sd[i - 1] && sd[i] <= sd[i + 1]);
        if (is_ext) return i;
    }
    return -1;
}

}  // namespace

std::vector<double> second_derivative(const std::vector<double>& x) {
    return central_diff(central_diff(moving_average5(x)));
}

std::vector<FiducialSet> sdppg_features(const std::vector<double>& ppg, double rate) {
    std::vector<FiducialSet> out;
    if (ppg.size() < 8) return out;
    const auto smooth = moving_average5(ppg);
    const auto sd = second_derivative(ppg);
    const auto peaks = detect_peaks(smooth, rate);
    if (peaks.empty()) return out;

    const int n = static_cast<int>(ppg.size());
    for (size_t p = 0; p < peaks.size(); ++p) {
        // Beat window: from ~0.3 s before the systolic peak to the next peak
        // (or signal end). The a wave sits on the upstroke.
        const int start = std::max(0, peaks[p] - static_cast<int>(0.3 * rate));
        const int end = p + 1 < peaks.size() ? peaks[p + 1]
                                             : std::min(n, peaks[p] + static_cast<int>(rate));
        if (end - start < 5) continue;

        // a: SDPPG max in early systole (up to slightly past the peak).
        const int early_end = std::min(end, peaks[p] + static_cast<int>(0.08 * rate) + 1);
        int a_idx = start;
        for (int i = start; i < early_end; ++i)
            if (sd[i] > sd[a_idx]) a_idx = i;

        const int b_idx = next_extremum(sd, a_idx, end, false);
        if (b_idx < 0) continue;
        const int c_idx = next_extremum(sd, b_idx, end, true);
        if (c_idx < 0) continue;
        const int d_idx = next_extremum(sd, c_idx, end, false);
        if (d_idx < 0) continue;
        const int e_idx = next_extremum(sd, d_idx, end, true);
        if (e_idx < 0) continue;

        FiducialSet f;
        f.index = {a_idx, b_idx, c_idx, d_idx, e_idx};
        f.amplitude = {sd[a_idx], sd[b_idx], sd[c_idx], sd[d_idx], sd[e_idx]};
        f.t_ab = (b_idx - a_idx) / rate;
        f.t_bc = (c_idx - b_idx) / rate;
        f.t_cd = (d_idx - c_idx) / rate;
        f.t_de = (e_idx - d_idx) / rate;
        if (f.amplitude[0] == 0.0) continue;
        f.agi = aging_index(f.amplitude[0], f.amplitude[1], f.amplitude[2],
                            f.amplitude[3], f.amplitude[4]);
        out.push_back(f);
    }
    return out;
}

FeatureAgreement feature_agreement(const std::vector<double>& ref_ppg,
                                   const std::vector<double>& twin_ppg, double rate) {
    const auto ref = sdppg_features(ref_ppg, rate);
    const auto twin = sdppg_features(twin_ppg, rate);
    if (ref.empty() || twin.empty())
        throw std::invalid_argument("feature_agreement: no beats detected");
    const auto diff = static_cast<int64_t>(ref.size()) - static_cast<int64_t>(twin.size());
    if (diff > 1 || diff < -1)
        throw std::invalid_argument("feature_agreement: beat counts differ by " +
                                    std::to_string(diff > 0 ? diff : -diff) +
                                    " (" + std::to_string(ref.size()) + " vs " +
                                    std::to_string(twin.size()) + ")");
    const size_t n = std::min(ref.size(), twin.size());
    FeatureAgreement out;
    std::array<std::vector<double>, 5> abs_cols;
    for (size_t k = 0; k < n; ++k) {
        const std::array<double, 5> rv = {ref[k].t_ab, ref[k].t_bc, ref[k].t_cd,
                                          ref[k].t_de, ref[k].agi};
        const std::array<double, 5> tv = {twin[k].t_ab, twin[k].t_bc, twin[k].t_cd,
                                          twin[k].t_de, twin[k].agi};
        std::array<double, 5> ad{}, rd{};
        for (int j = 0; j < 5; ++j) {
            ad[j] = std::abs(rv[j] - tv[j]);
            rd[j] = std::abs(rv[j]) > 1e-12 ? ad[j] / std::abs(rv[j]) : 0.0;
            abs_cols[j].push_back(ad[j]);
        }
        out.abs_diff.push_back(ad);
        out.rel_diff.push_back(rd);
    }
    for (int j = 0; j < 5; ++j) out.median_abs[j] = median(abs_cols[j]);
    return out;
}

void export_embeddings(const std::vector<SegmentPair>& pairs,
                       const std::vector<std::vector<double>>& twins,
                       const std::string& path) {
    if (pairs.size() != twins.size())
        throw std::invalid_argument("export_embeddings: pair/twin count mismatch");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("export_embeddings: cannot open " + path);
    const size_t dim = pairs.empty() ? 450 : pairs[0].ppg.size();
    out << "label,subject_id";
    for (size_t i = 0; i < dim; ++i) out << ",v" << i;
    out << "\n";
    char buf[32];
    auto write_row = [&](const char* label, const std::string& subject,
                         const std::vector<double>& v) {
        out << label << "," << subject;
        for (double x : v) {
            std::snprintf(buf, sizeof(buf), "%.9g", x);
            out << "," << buf;
        }
        out << "\n";
    };
    for (const auto& p : pairs) write_row("reference", p.subject_id, p.ppg);
    for (size_t i = 0; i < twins.size(); ++i)
        write_row("twin", pairs[i].subject_id, twins[i]);
    if (!out) throw std::runtime_error("export_embeddings: write failed for " + path);
}

models::VitalsLabels segment_vitals_labels(
    const std::vector<SegmentPair>& pairs,
    const std::vector<physio::SubjectData>& subjects, double win_s) {
    std::map<std::string, const physio::SubjectData*> by_id;
    for (const auto& s : subjects) by_id[s.profile.subject_id] = &s;
    models::VitalsLabels labels;
    labels.reserve(pairs.size());
    for (const auto& p : pairs) {
        const auto it = by_id.find(p.subject_id);
        if (it == by_id.end())
            throw std::invalid_argument("segment_vitals_labels: unknown subject " +
                                        p.subject_id);
        const auto& vitals = it->second->vitals;
        const double t0 = p.segment_index * win_s;
        const double t1 = t0 + win_s;
        double hr = 0.0, spo2 = 0.0, rr = 0.0;
        int cnt = 0;
        for (const auto& v : vitals) {
            if (v.timestamp + 1.0 <= t0 || v.timestamp >= t1) continue;
            hr += v.hr;
            spo2 += v.spo2;
            rr += v.rr;
            ++cnt;
        }
        if (cnt == 0 && !vitals.empty()) {
            const auto& v = vitals.back();
            hr = v.hr;
            spo2 = v.spo2;
            rr = v.rr;
            cnt = 1;
        }
        labels.push_back({hr / cnt, spo2 / cnt, rr / cnt});
    }
    return labels;
}

}  // namespace radiotwin::evalkit
