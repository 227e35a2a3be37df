#pragma once

#include <vector>

namespace radiotwin::wavelet {

// Single-level db2 analysis with half-sample symmetric extension.
// Each band has length floor((n + 3) / 2).
struct Bands {
    std::vector<double> approx;
    std::vector<double> detail;
    int input_len = 0;
};

Bands dwt_db2(const std::vector<double>& x);

// Inverse of dwt_db2; reconstructs exactly the interior input_len samples.
std::vector<double> idwt_db2(const Bands& b);

// Multilevel decomposition: details[0] is level 1 (finest), approx is the
// level-`levels` approximation.
struct MultilevelDecomposition {
    std::vector<std::vector<double>> details;
    std::vector<double> approx;
    std::vector<int> level_input_len;  // input length at each level
};

MultilevelDecomposition wavedec_db2(const std::vector<double>& x, int levels);

// Reconstructs to the original length. `keep_approx` zeroes or keeps the
// approximation band; `keep_detail_level` of 0 keeps none, k keeps only
// level k (1-based), -1 keeps all.
std::vector<double> waverec_db2(const MultilevelDecomposition& dec,
                                bool keep_approx, int keep_detail_level);

}  // namespace radiotwin::wavelet
