#include "radiotwin/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "radiotwin/filters.hpp"
#include "radiotwin/rng.hpp"
#include "radiotwin/wavelet.hpp"

namespace radiotwin::preprocess {

std::vector<int> stride_indices(int total, int n_ch) {
    if (n_ch < 1 || n_ch > total)
        throw std::invalid_argument("stride_indices: n_ch out of range [1, " +
                                    std::to_string(total) + "]");
    std::vector<int> idx(n_ch);
    for (int i = 0; i < n_ch; ++i)
        idx[i] = static_cast<int>((static_cast<int64_t>(i) * total) / n_ch);
    return idx;
}

physio::RadioRecording select_channels(const physio::RadioRecording& rec, int n_ch) {
    const int total = rec.frames.empty() ? 64 : static_cast<int>(rec.frames[0].h.size());
    const auto idx = stride_indices(total, n_ch);
    physio::RadioRecording out;
    out.rate = rec.rate;
    out.subject_id = rec.subject_id;
    out.frames.resize(rec.frames.size());
    for (size_t f = 0; f < rec.frames.size(); ++f) {
        auto& dst = out.frames[f];
        dst.symbol_index = rec.frames[f].symbol_index;
        dst.timestamp = rec.frames[f].timestamp;
        dst.h.resize(n_ch);
        for (int i = 0; i < n_ch; ++i) dst.h[i] = rec.frames[f].h[idx[i]];
    }
    return out;
}

RealMatrix expand_complex(const physio::RadioRecording& rec) {
    const int n_ch = rec.frames.empty() ? 0 : static_cast<int>(rec.frames[0].h.size());
    const int t_len = static_cast<int>(rec.frames.size());
    RealMatrix m(2 * n_ch, t_len);
    for (int t = 0; t < t_len; ++t) {
        const auto& h = rec.frames[t].h;
        for (int c = 0; c < n_ch; ++c) {
            m.at(c, t) = h[c].real();
            m.at(n_ch + c, t) = h[c].imag();
        }
    }
    return m;
}

std::vector<std::vector<double>> segment(const std::vector<double>& stream,
                                         double rate, double win_s) {
    const int64_t win = static_cast<int64_t>(std::llround(win_s * rate));
    if (win <= 0) throw std::invalid_argument("segment: window must be positive");
    const int64_t n_win = static_cast<int64_t>(stream.size()) / win;
    if (n_win == 0)
        throw std::invalid_argument("segment: stream shorter than one window");
    std::vector<std::vector<double>> out(n_win);
    for (int64_t w = 0; w < n_win; ++w)
        out[w].assign(stream.begin() + w * win, stream.begin() + (w + 1) * win);
    return out;
}

std::vector<double> zscore(const std::vector<double>& x) {
    if (x.empty()) throw std::invalid_argument("zscore: empty input");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= x.size();
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= x.size();
    if (var <= 0.0)
        throw std::invalid_argument("zscore: constant input (degenerate segment)");
    const double inv_std = 1.0 / std::sqrt(var);
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) * inv_std;
    return out;
}

std::vector<SegmentPair> augment(const std::vector<SegmentPair>& pairs,
                                 double noise_var, uint64_t seed) {
    if (noise_var < 0.0)
        throw std::invalid_argument("augment: noise_var must be >= 0");
    std::vector<SegmentPair> out;
    out.reserve(pairs.size() * 2);
    out.insert(out.end(), pairs.begin(), pairs.end());
    const double sd = std::sqrt(noise_var);
    for (size_t i = 0; i < pairs.size(); ++i) {
        SegmentPair copy = pairs[i];
        copy.augmented = true;
        Rng rng(Rng::derive(seed, i));
        for (auto& v : copy.radio.data) v += sd * rng.gaussian();
        for (auto& v : copy.ppg) v += sd * rng.gaussian();
        out.push_back(std::move(copy));
    }
    return out;
}

physio::PpgRecording detrend_wavelet(const physio::PpgRecording& ppg, int levels) {
    if (static_cast<int64_t>(ppg.samples.size()) < (int64_t(1) << levels))
        throw std::invalid_argument("detrend_wavelet: input shorter than 2^levels");
    const auto dec = wavelet::wavedec_db2(ppg.samples, levels);
    const auto trend = wavelet::waverec_db2(dec, /*keep_approx=*/true,
                                            /*keep_detail_level=*/0);
    physio::PpgRecording out;
    out.rate = ppg.rate;
    out.samples.resize(ppg.samples.size());
    for (size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] = ppg.samples[i] - trend[i];
    return out;
}

std::vector<double> butterworth_lowpass(const std::vector<double>& x, double rate,
                                        double cutoff, int order) {
    const auto sos = filters::butterworth_lowpass_sos(order, cutoff, rate);
    return filters::filtfilt(sos, x);
}

std::vector<double> extract_d7(const std::vector<double>& channel_mag, double rate) {
    (void)rate;  // the band lands at 0.98-1.95 Hz for the 250 Hz CFR stream
    if (channel_mag.size() < (1u << 7))
        throw std::invalid_argument("extract_d7: input shorter than 2^7");
    const auto dec = wavelet::wavedec_db2(channel_mag, 7);
    return wavelet::waverec_db2(dec, /*keep_approx=*/false, /*keep_detail_level=*/7);
}

AlignmentResult align(const std::vector<double>& w, const std::vector<double>& y,
                      int max_lag) {
    if (w.size() != y.size())
        throw std::invalid_argument("align: signals must have equal length");
    const int64_t n = static_cast<int64_t>(w.size());
    if (max_lag < 0 || max_lag >= n / 2)
        throw std::invalid_argument("align: max_lag must be in [0, length/2)");

    // score(tau) = sum_t y[t] w[t - tau]; out-of-range samples are zero.
    auto score_at = [&](int64_t tau) {
        double acc = 0.0;
        const int64_t lo = std::max<int64_t>(0, tau);
        const int64_t hi = std::min(n, n + tau);
        for (int64_t t = lo; t < hi; ++t) acc += y[t] * w[t - tau];
        return acc;
    };

    // Scan 0, +1, -1, +2, -2, ... with strict improvement, which resolves
    // ties toward the smallest |tau|.
    AlignmentResult best{0, score_at(0)};
    for (int64_t m = 1; m <= max_lag; ++m) {
        for (int64_t tau : {m, -m}) {
            const double s = score_at(tau);
            if (s > best.score) best = {tau, s};
        }
    }
    return best;
}

std::vector<double> resample_to(const std::vector<double>& x, int out_len) {
    if (x.size() < 2) throw std::invalid_argument("resample_to: need at least 2 samples");
    if (out_len < 1) throw std::invalid_argument("resample_to: out_len must be >= 1");
    const int64_t n = static_cast<int64_t>(x.size());
    std::vector<double> out(out_len);
    if (out_len == 1) {
        out[0] = x[0];
        return out;
    }
    const double step = static_cast<double>(n - 1) / (out_len - 1);
    for (int i = 0; i < out_len; ++i) {
        const double pos = i * step;
        const int64_t i0 = std::min<int64_t>(static_cast<int64_t>(pos), n - 2);
        const double frac = pos - i0;
        out[i] = x[i0] * (1.0 - frac) + x[i0 + 1] * frac;
    }
    out[out_len - 1] = x[n - 1];  // endpoint exact
    return out;
}

namespace {

// Conditioned PPG used both for alignment and as the synthesis target.
std::vector<double> condition_ppg(const physio::PpgRecording& ppg, const BuildOptions& opt) {
    const auto detrended = detrend_wavelet(ppg, opt.detrend_levels);
    return butterworth_lowpass(detrended.samples, ppg.rate, opt.lowpass_hz,
                               opt.lowpass_order);
}

std::vector<double> mean_channel_magnitude(const physio::RadioRecording& rec) {
    std::vector<double> mag(rec.frames.size(), 0.0);
    for (size_t t = 0; t < rec.frames.size(); ++t) {
        double acc = 0.0;
        for (const auto& v : rec.frames[t].h) acc += std::abs(v);
        mag[t] = rec.frames[t].h.empty() ? 0.0 : acc / rec.frames[t].h.size();
    }
    return mag;
}

physio::RadioRecording pick_channels(const physio::RadioRecording& rec,
                                     const std::vector<int>& indices) {
    physio::RadioRecording out;
    out.rate = rec.rate;
    out.subject_id = rec.subject_id;
    out.frames.resize(rec.frames.size());
    for (size_t f = 0; f < rec.frames.size(); ++f) {
        out.frames[f].symbol_index = rec.frames[f].symbol_index;
        out.frames[f].timestamp = rec.frames[f].timestamp;
        out.frames[f].h.reserve(indices.size());
        for (int c : indices) out.frames[f].h.push_back(rec.frames[f].h[c]);
    }
    return out;
}

physio::RadioRecording apply_selection(const physio::RadioRecording& rec,
                                       const BuildOptions& opt) {
    return opt.channel_indices.empty() ? select_channels(rec, opt.n_ch)
                                       : pick_channels(rec, opt.channel_indices);
}

}  // namespace

AlignmentResult compute_alignment(const physio::RadioRecording& radio,
                                  const physio::PpgRecording& ppg,
                                  const BuildOptions& opt) {
    const auto selected = apply_selection(radio, opt);
    const auto w = extract_d7(mean_channel_magnitude(selected), radio.rate);
    auto y = condition_ppg(ppg, opt);
    const int64_t y_len_at_radio_rate =
        static_cast<int64_t>(std::llround(ppg.samples.size() / ppg.rate * radio.rate));
    y = resample_to(y, static_cast<int>(y_len_at_radio_rate));

    const int64_t n = std::min<int64_t>(w.size(), y.size());
    std::vector<double> wc(w.begin(), w.begin() + n);
    std::vector<double> yc(y.begin(), y.begin() + n);
    const int max_lag = static_cast<int>(std::llround(opt.max_lag_s * radio.rate));
    return align(wc, yc, max_lag);
}

std::vector<SegmentPair> build_pairs(const physio::RadioRecording& radio,
                                     const physio::PpgRecording& ppg,
                                     const BuildOptions& opt) {
    const double radio_dur = radio.frames.size() / radio.rate;
    const double ppg_dur = ppg.samples.size() / ppg.rate;
    if (std::min(radio_dur, ppg_dur) < opt.win_s)
        throw std::invalid_argument("build_pairs: overlapping coverage below one window");

    const auto alignment = compute_alignment(radio, ppg, opt);

    // Positive lag: PPG is delayed relative to the radio stream, so its
    // head must be dropped; negative lag drops the radio head.
    const double lag_s = alignment.lag / radio.rate;
    physio::RadioRecording radio_sel = apply_selection(radio, opt);

    std::vector<double> target = condition_ppg(ppg, opt);

    int64_t radio_skip = 0, ppg_skip = 0;
    if (alignment.lag > 0)
        ppg_skip = static_cast<int64_t>(std::llround(lag_s * ppg.rate));
    else if (alignment.lag < 0)
        radio_skip = -alignment.lag;

    const double radio_left = (radio_sel.frames.size() - radio_skip) / radio.rate;
    const double ppg_left = (target.size() - ppg_skip) / ppg.rate;
    if (std::abs(radio_left - ppg_left) > 1.0)
        throw std::runtime_error(
            "build_pairs: stream durations differ by more than 1 s after alignment (" +
            std::to_string(radio_left) + " s radio vs " + std::to_string(ppg_left) +
            " s ppg)");

    if (radio_skip > 0)
        radio_sel.frames.erase(radio_sel.frames.begin(),
                               radio_sel.frames.begin() + radio_skip);
    if (ppg_skip > 0) target.erase(target.begin(), target.begin() + ppg_skip);

    const RealMatrix expanded = expand_complex(radio_sel);

    const int64_t radio_win = static_cast<int64_t>(std::llround(opt.win_s * radio.rate));
    const int64_t ppg_win = static_cast<int64_t>(std::llround(opt.win_s * ppg.rate));
    const int64_t n_win = std::min<int64_t>(expanded.cols / radio_win,
                                            static_cast<int64_t>(target.size()) / ppg_win);
    if (n_win == 0)
        throw std::invalid_argument("build_pairs: no full window after alignment");

    std::vector<SegmentPair> pairs;
    pairs.reserve(n_win);
    std::vector<double> row_buf(radio_win);
    for (int64_t w = 0; w < n_win; ++w) {
        SegmentPair pair;
        pair.subject_id = radio.subject_id;
        pair.segment_index = w;
        pair.radio = RealMatrix(expanded.rows, opt.out_len);
        bool degenerate = false;
        for (int r = 0; r < expanded.rows && !degenerate; ++r) {
            const double* src = expanded.row(r) + w * radio_win;
            row_buf.assign(src, src + radio_win);
            auto resampled = resample_to(row_buf, opt.out_len);
            try {
                resampled = zscore(resampled);
            } catch (const std::invalid_argument&) {
                degenerate = true;
                break;
            }
            std::copy(resampled.begin(), resampled.end(), pair.radio.row(r));
        }
        if (degenerate) continue;
        std::vector<double> ppg_win_samples(target.begin() + w * ppg_win,
                                            target.begin() + (w + 1) * ppg_win);
        auto y = resample_to(ppg_win_samples, opt.out_len);
        try {
            y = zscore(y);
        } catch (const std::invalid_argument&) {
            continue;
        }
        pair.ppg = std::move(y);
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

}  // namespace radiotwin::preprocess
