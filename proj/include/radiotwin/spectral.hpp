#pragma once

#include <vector>

namespace radiotwin::spectral {

// Unnormalized DCT type-II: X[k] = sum_n x[n] cos(pi/N (n+1/2) k).
std::vector<double> dct2(const std::vector<double>& x);

// Matching inverse: x[n] = (1/N) (X[0] + 2 sum_{k>=1} X[k] cos(pi/N (n+1/2) k)).
std::vector<double> idct2(const std::vector<double>& X);

// Cosine table c[k*n + n_idx] = cos(pi/N (n+1/2) k), cached per length.
// Shared with the model code, which needs the same basis for the
// differentiable inverse transform.
const std::vector<double>& cos_basis(int n);

}  // namespace radiotwin::spectral
