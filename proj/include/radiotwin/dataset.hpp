#pragma once

#include <string>
#include <vector>

#include "radiotwin/physio.hpp"

namespace radiotwin::dataset {

// On-disk layout, format_version 1:
//   <dir>/manifest.json
//   <dir>/<subject_id>/radio.bin   frames x N x 2 float32 LE (re, im interleaved)
//   <dir>/<subject_id>/ppg.bin    samples float32 LE
//   <dir>/<subject_id>/vitals.bin  records x 3 float32 LE (hr, spo2, rr), 1 Hz
// The manifest is the single source of shape truth; blob byte lengths must
// match it exactly. Every file carries an FNV-1a checksum in the manifest.
inline constexpr int kFormatVersion = 1;

void save_dataset(const std::string& dir,
                  const std::vector<physio::SubjectData>& subjects);

// Validates sizes and checksums; throws IntegrityError naming the file and
// the expected/actual byte counts on any mismatch, and on unknown
// format_version. Loaded profiles carry only the subject id.
std::vector<physio::SubjectData> load_dataset(const std::string& dir);

uint64_t fnv1a64(const void* data, size_t len);

}  // namespace radiotwin::dataset
