#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radiotwin/ofdm.hpp"

namespace radiotwin::physio {

// Synthetic-subject parameters; stands in for a recorded volunteer.
struct SubjectProfile {
    std::string subject_id;
    double hr = 72.0;            // beats/min, [50, 110]
    double rr = 16.0;            // breaths/min, [10, 25]
    double spo2 = 97.0;          // percent, [90, 100]
    double systolic_width_s = 0.09;
    double dicrotic_delay_s = 0.32;
    double dicrotic_amp_ratio = 0.4;  // in (0, 1)
    double hr_jitter = 0.04;     // fractional std of beat intervals
};

struct PpgRecording {
    std::vector<double> samples;
    double rate = 200.0;
};

struct VitalsRecord {
    double hr = 0.0;
    double spo2 = 0.0;
    double rr = 0.0;
    double timestamp = 0.0;  // seconds, 1 Hz grid
};

struct RadioRecording {
    std::vector<ofdm::CfrFrame> frames;
    double rate = 250.0;
    std::string subject_id;
};

// Quasi-periodic pulse train: per beat a systolic Gaussian plus a delayed
// dicrotic Gaussian, beat intervals 60/hr with multiplicative jitter, and
// respiratory amplitude/baseline modulation at rr/60 Hz.
PpgRecording synth_ppg(const SubjectProfile& profile, double duration,
                       double rate, uint64_t seed);

// Beat onset times used by synth_ppg; exposed for label generation.
std::vector<double> beat_times(const SubjectProfile& profile, double duration,
                               uint64_t seed);

// Per-second labels derived from the realized beat train.
std::vector<VitalsRecord> vitals_from_beats(const std::vector<double>& beats,
                                            const SubjectProfile& profile,
                                            double duration);

// d(t) = amp_resp * sin(2 pi (rr/60) t) + amp_cardiac * normalized_ppg(t),
// sampled at the PPG rate. normalized_ppg is min-max scaled to [0, 1].
std::vector<double> chest_displacement(const PpgRecording& ppg, double rr,
                                       double amp_cardiac = 0.3e-3,
                                       double amp_resp = 4.0e-3);

// Chest-reflection CFR stream: per subcarrier k with wavelength
// lambda_k = c / (f_c + k df),
//   h_k(t) = clutter_k + reflect_amp_k * exp(j 4 pi d(t) / lambda_k),
// pushed through the full OFDM link (known QPSK symbols, AWGN channel, LS
// estimation), one CfrFrame per displacement sample.
RadioRecording modulate_cfr(const std::vector<double>& displacement,
                            const ofdm::OfdmConfig& cfg,
                            const ofdm::ComplexVec& clutter,
                            const ofdm::ComplexVec& reflect_amp,
                            double noise_var, uint64_t seed);

struct CohortOptions {
    double ppg_rate = 200.0;
    double noise_var = 1e-6;     // time-domain AWGN at the OFDM receiver
    double amp_cardiac = 0.3e-3; // meters
    double amp_resp = 4.0e-3;    // meters
    ofdm::OfdmConfig ofdm;
};

struct SubjectData {
    SubjectProfile profile;
    RadioRecording radio;
    PpgRecording ppg;
    std::vector<VitalsRecord> vitals;
};

std::vector<SubjectProfile> draw_profiles(int n_subjects, uint64_t seed);

SubjectData generate_subject(const SubjectProfile& profile, double duration,
                             uint64_t seed, const CohortOptions& opt = {});

// Writes RadioRecording + PpgRecording + VitalsRecords per subject in the
// on-disk dataset format. Per-subject seeds derive as seed + subject index.
void generate_cohort(int n_subjects, double duration, uint64_t seed,
                     const std::string& out_dir, const CohortOptions& opt = {});

}  // namespace radiotwin::physio
