#pragma once

namespace radiotwin {

// Global worker count for the OpenMP kernels. 1 = serial mode.
// Kernels are decomposed over independent output elements with a fixed
// per-element summation order, so results are bit-identical for any
// thread count.
void set_num_threads(int n);
int num_threads();

}  // namespace radiotwin
