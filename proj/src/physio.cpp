#include "radiotwin/physio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "radiotwin/dataset.hpp"
#include "radiotwin/preprocess.hpp"
#include "radiotwin/rng.hpp"

namespace radiotwin::physio {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLightSpeed = 299792458.0;
}

std::vector<double> beat_times(const SubjectProfile& profile, double duration,
                               uint64_t seed) {
    if (duration <= 0.0) throw std::invalid_argument("beat_times: duration must be > 0");
    Rng rng(seed);
    const double mean_interval = 60.0 / profile.hr;
    std::vector<double> beats;
    double t = 0.25 * mean_interval;  // first beat shortly after start
    while (t < duration + 2.0) {
        beats.push_back(t);
        double g = rng.gaussian();
        g = std::clamp(g, -3.0, 3.0);
        const double interval = mean_interval * std::max(0.3, 1.0 + profile.hr_jitter * g);
        t += interval;
    }
    return beats;
}

PpgRecording synth_ppg(const SubjectProfile& profile, double duration,
                       double rate, uint64_t seed) {
    if (duration <= 0.0) throw std::invalid_argument("synth_ppg: duration must be > 0");
    const auto beats = beat_times(profile, duration, seed);
    const int64_t n = static_cast<int64_t>(std::llround(duration * rate));
    std::vector<double> pulse(n, 0.0);

    const double sigma = profile.systolic_width_s;
    const double window = 5.0 * sigma;
    auto add_gauss = [&](double center, double amp) {
        const int64_t lo = std::max<int64_t>(0, static_cast<int64_t>((center - window) * rate));
        const int64_t hi = std::min<int64_t>(n - 1, static_cast<int64_t>((center + window) * rate) + 1);
        for (int64_t i = lo; i <= hi; ++i) {
            const double dt = i / rate - center;
            pulse[i] += amp * std::exp(-dt * dt / (2.0 * sigma * sigma));
        }
    };
    for (double tb : beats) {
        add_gauss(tb, 1.0);
        if (profile.dicrotic_amp_ratio > 0.0)
            add_gauss(tb + profile.dicrotic_delay_s, profile.dicrotic_amp_ratio);
    }

    // Respiratory influence: amplitude modulation plus a small baseline sway.
    const double f_resp = profile.rr / 60.0;
    PpgRecording rec;
    rec.rate = rate;
    rec.samples.resize(n);
    for (int64_t i = 0; i < n; ++i) {
        const double s = std::sin(kTwoPi * f_resp * (i / rate));
        rec.samples[i] = pulse[i] * (1.0 + 0.10 * s) + 0.05 * s;
    }
    return rec;
}

std::vector<VitalsRecord> vitals_from_beats(const std::vector<double>& beats,
                                            const SubjectProfile& profile,
                                            double duration) {
    const int64_t secs = static_cast<int64_t>(duration);
    std::vector<VitalsRecord> out;
    out.reserve(secs);
    double last_hr = profile.hr;
    for (int64_t s = 0; s < secs; ++s) {
        // Mean instantaneous rate of the intervals overlapping this second.
        double acc = 0.0;
        int count = 0;
        for (size_t i = 0; i + 1 < beats.size(); ++i) {
            const double a = beats[i], b = beats[i + 1];
            if (b <= s || a >= s + 1) continue;
            acc += 60.0 / (b - a);
            ++count;
        }
        if (count > 0) last_hr = acc / count;
        out.push_back({last_hr, profile.spo2, profile.rr, static_cast<double>(s)});
    }
    return out;
}

std::vector<double> chest_displacement(const PpgRecording& ppg, double rr,
                                       double amp_cardiac, double amp_resp) {
    if (amp_cardiac < 0.0 || amp_resp < 0.0)
        throw std::invalid_argument("chest_displacement: amplitudes must be >= 0");
    const auto& x = ppg.samples;
    double lo = 0.0, hi = 0.0;
    if (!x.empty()) {
        auto [mn, mx] = std::minmax_element(x.begin(), x.end());
        lo = *mn;
        hi = *mx;
    }
    const double span = hi - lo;
    const double f_resp = rr / 60.0;
    std::vector<double> d(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        const double normalized = span > 0.0 ? (x[i] - lo) / span : 0.0;
        d[i] = amp_resp * std::sin(kTwoPi * f_resp * (i / ppg.rate)) +
               amp_cardiac * normalized;
    }
    return d;
}

RadioRecording modulate_cfr(const std::vector<double>& displacement,
                            const ofdm::OfdmConfig& cfg,
                            const ofdm::ComplexVec& clutter,
                            const ofdm::ComplexVec& reflect_amp,
                            double noise_var, uint64_t seed) {
    cfg.validate();
    const int n = cfg.n_subcarriers;
    if (static_cast<int>(clutter.size()) != n || static_cast<int>(reflect_amp.size()) != n)
        throw std::invalid_argument("modulate_cfr: clutter/reflect_amp must have length N");

    // Per-subcarrier wavelengths; the spacing matters little at 5.23 GHz but
    // is carried for correctness.
    std::vector<double> four_pi_over_lambda(n);
    for (int k = 0; k < n; ++k) {
        const double lambda = kLightSpeed / (cfg.carrier_freq + k * cfg.subcarrier_spacing());
        four_pi_over_lambda[k] = 4.0 * std::numbers::pi / lambda;
    }

    RadioRecording rec;
    rec.rate = cfg.symbol_rate();
    rec.frames.resize(displacement.size());

    ofdm::ComplexVec h_true(n);
    std::vector<uint8_t> bits(size_t(2) * n);
    for (size_t i = 0; i < displacement.size(); ++i) {
        for (int k = 0; k < n; ++k) {
            const double phase = four_pi_over_lambda[k] * displacement[i];
            h_true[k] = clutter[k] + reflect_amp[k] * std::polar(1.0, phase);
        }
        // Known QPSK training symbols on every subcarrier.
        Rng bit_rng(Rng::derive(seed, 2 * i));
        for (auto& b : bits) b = bit_rng.bit() ? 1 : 0;
        const auto d_sym = ofdm::map_qpsk(bits);
        const auto tx = ofdm::add_cyclic_prefix(ofdm::ofdm_modulate(d_sym, cfg), cfg);
        const auto rx = ofdm::apply_channel(tx, h_true, noise_var,
                                            Rng::derive(seed, 2 * i + 1), cfg);
        const auto y = ofdm::ofdm_demodulate(ofdm::remove_cyclic_prefix(rx, cfg), cfg);
        auto frame = ofdm::ls_estimate({d_sym}, {y}, cfg);
        frame.symbol_index = static_cast<int64_t>(i);
        frame.timestamp = i / rec.rate;
        rec.frames[i] = std::move(frame);
    }
    return rec;
}

std::vector<SubjectProfile> draw_profiles(int n_subjects, uint64_t seed) {
    std::vector<SubjectProfile> profiles;
    profiles.reserve(n_subjects);
    for (int i = 0; i < n_subjects; ++i) {
        Rng rng(Rng::derive(seed, 7000 + i));
        SubjectProfile p;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "subj%02d", i + 1);
        p.subject_id = buf;
        p.hr = rng.uniform(55.0, 100.0);
        p.rr = rng.uniform(11.0, 24.0);
        p.spo2 = rng.uniform(92.0, 99.5);
        p.systolic_width_s = rng.uniform(0.07, 0.11);
        p.dicrotic_delay_s = rng.uniform(0.25, 0.38);
        p.dicrotic_amp_ratio = rng.uniform(0.25, 0.55);
        p.hr_jitter = rng.uniform(0.02, 0.06);
        profiles.push_back(p);
    }
    return profiles;
}

SubjectData generate_subject(const SubjectProfile& profile, double duration,
                             uint64_t seed, const CohortOptions& opt) {
    SubjectData sd;
    sd.profile = profile;
    sd.ppg = synth_ppg(profile, duration, opt.ppg_rate, seed);
    sd.vitals = vitals_from_beats(beat_times(profile, duration, seed), profile, duration);

    const auto disp_ppg_rate = chest_displacement(sd.ppg, profile.rr,
                                                  opt.amp_cardiac, opt.amp_resp);
    const int64_t n_frames =
        static_cast<int64_t>(std::llround(duration * opt.ofdm.symbol_rate()));
    const auto disp = preprocess::resample_to(disp_ppg_rate, static_cast<int>(n_frames));

    Rng env_rng(Rng::derive(seed, 31));
    ofdm::ComplexVec clutter(opt.ofdm.n_subcarriers), reflect(opt.ofdm.n_subcarriers);
    for (int k = 0; k < opt.ofdm.n_subcarriers; ++k) {
        clutter[k] = std::polar(1.0, env_rng.uniform(0.0, kTwoPi));
        reflect[k] = std::polar(1.0, env_rng.uniform(0.0, kTwoPi));
    }
    sd.radio = modulate_cfr(disp, opt.ofdm, clutter, reflect, opt.noise_var,
                            Rng::derive(seed, 57));
    sd.radio.subject_id = profile.subject_id;
    return sd;
}

void generate_cohort(int n_subjects, double duration, uint64_t seed,
                     const std::string& out_dir, const CohortOptions& opt) {
    if (n_subjects < 2)
        throw std::invalid_argument("generate_cohort: need at least 2 subjects");
    const auto profiles = draw_profiles(n_subjects, seed);
    std::vector<SubjectData> subjects;
    subjects.reserve(n_subjects);
    for (int i = 0; i < n_subjects; ++i)
        subjects.push_back(generate_subject(profiles[i], duration, seed + i, opt));
    dataset::save_dataset(out_dir, subjects);
}

}  // namespace radiotwin::physio
