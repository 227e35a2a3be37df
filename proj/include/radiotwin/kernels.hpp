#pragma once

namespace radiotwin::kernels {

// Dense and convolution kernels shared by the autodiff layer. All loops are
// decomposed over independent output elements with a fixed inner summation
// order, so any thread count produces bit-identical results. Backward
// kernels accumulate (+=) into the gradient buffers.

// y(b,out) = x(b,in) * w(in,out) + bias(out); bias may be null.
void linear_forward(const double* x, const double* w, const double* bias,
                    double* y, int b, int in, int out);
// gx(b,in) += gy(b,out) * w^T
void linear_backward_input(const double* gy, const double* w, double* gx,
                           int b, int in, int out);
// gw(in,out) += x^T gy; gbias(out) += column sums of gy (skipped when null)
void linear_backward_params(const double* x, const double* gy, double* gw,
                            double* gbias, int b, int in, int out);

// 1-D convolution, stride 1, zero "same" padding, odd kernel width.
// x(b,ci,len), w(co,ci,k), y(b,co,len).
void conv1d_forward(const double* x, const double* w, const double* bias,
                    double* y, int b, int ci, int co, int len, int k);
void conv1d_backward_input(const double* gy, const double* w, double* gx,
                           int b, int ci, int co, int len, int k);
void conv1d_backward_params(const double* x, const double* gy, double* gw,
                            double* gbias, int b, int ci, int co, int len, int k);

}  // namespace radiotwin::kernels
