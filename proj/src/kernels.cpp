#include "radiotwin/kernels.hpp"

#include <algorithm>

#include "radiotwin/parallel.hpp"

namespace radiotwin::kernels {

void linear_forward(const double* x, const double* w, const double* bias,
                    double* y, int b, int in, int out) {
    const int nt = radiotwin::num_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int bi = 0; bi < b; ++bi) {
        double* yr = y + static_cast<size_t>(bi) * out;
        if (bias) {
            for (int o = 0; o < out; ++o) yr[o] = bias[o];
        } else {
            std::fill(yr, yr + out, 0.0);
        }
        const double* xr = x + static_cast<size_t>(bi) * in;
        for (int k = 0; k < in; ++k) {
            const double xv = xr[k];
            const double* wr = w + static_cast<size_t>(k) * out;
            for (int o = 0; o < out; ++o) yr[o] += xv * wr[o];
        }
    }
}

void linear_backward_input(const double* gy, const double* w, double* gx,
                           int b, int in, int out) {
    const int nt = radiotwin::num_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int bi = 0; bi < b; ++bi) {
        const double* gr = gy + static_cast<size_t>(bi) * out;
        double* gxr = gx + static_cast<size_t>(bi) * in;
        for (int k = 0; k < in; ++k) {
            const double* wr = w + static_cast<size_t>(k) * out;
            double acc = 0.0;
            for (int o = 0; o < out; ++o) acc += gr[o] * wr[o];
            gxr[k] += acc;
        }
    }
}

void linear_backward_params(const double* x, const double* gy, double* gw,
                            double* gbias, int b, int in, int out) {
    const int nt = radiotwin::num_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int k = 0; k < in; ++k) {
        double* gwr = gw + static_cast<size_t>(k) * out;
        for (int bi = 0; bi < b; ++bi) {
            const double xv = x[static_cast<size_t>(bi) * in + k];
            const double* gr = gy + static_cast<size_t>(bi) * out;
            for (int o = 0; o < out; ++o) gwr[o] += xv * gr[o];
        }
    }
    if (gbias) {
        for (int bi = 0; bi < b; ++bi) {
            const double* gr = gy + static_cast<size_t>(bi) * out;
            for (int o = 0; o < out; ++o) gbias[o] += gr[o];
        }
    }
}

void conv1d_forward(const double* x, const double* w, const double* bias,
                    double* y, int b, int ci, int co, int len, int k) {
    const int half = k / 2;
    const int nt = radiotwin::num_threads();
#pragma omp parallel for collapse(2) schedule(static) num_threads(nt)
    for (int bi = 0; bi < b; ++bi) {
        for (int oc = 0; oc < co; ++oc) {
            double* yr = y + (static_cast<size_t>(bi) * co + oc) * len;
            const double bv = bias ? bias[oc] : 0.0;
            std::fill(yr, yr + len, bv);
            for (int ic = 0; ic < ci; ++ic) {
                const double* xr = x + (static_cast<size_t>(bi) * ci + ic) * len;
                const double* wr = w + (static_cast<size_t>(oc) * ci + ic) * k;
                for (int kk = 0; kk < k; ++kk) {
                    const double wv = wr[kk];
                    const int off = kk - half;
                    const int t0 = std::max(0, -off);
                    const int t1 = std::min(len, len - off);
                    for (int t = t0; t < t1; ++t) yr[t] += wv * xr[t + off];
                }
            }
        }
    }
}

void conv1d_backward_input(const double* gy, const double* w, double* gx,
                           int b, int ci, int co, int len, int k) {
    const int half = k / 2;
    const int nt = radiotwin::num_threads();
#pragma omp parallel for collapse(2) schedule(static) num_threads(nt)
    for (int bi = 0; bi < b; ++bi) {
        for (int ic = 0; ic < ci; ++ic) {
            double* gxr = gx + (static_cast<size_t>(bi) * ci + ic) * len;
            for (int oc = 0; oc < co; ++oc) {
                const double* gr = gy + (static_cast<size_t>(bi) * co + oc) * len;
                const double* wr = w + (static_cast<size_t>(oc) * ci + ic) * k;
                for (int kk = 0; kk < k; ++kk) {
                    const double wv = wr[kk];
                    const int off = kk - half;
                    // y[t] consumed x[t + off]  =>  gx[s] += w * gy[s - off]
                    const int s0 = std::max(0, off);
                    const int s1 = std::min(len, len + off);
                    for (int s = s0; s < s1; ++s) gxr[s] += wv * gr[s - off];
                }
            }
        }
    }
}

void conv1d_backward_params(const double* x, const double* gy, double* gw,
                            double* gbias, int b, int ci, int co, int len, int k) {
    const int half = k / 2;
    const int nt = radiotwin::num_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int oc = 0; oc < co; ++oc) {
        for (int ic = 0; ic < ci; ++ic) {
            double* gwr = gw + (static_cast<size_t>(oc) * ci + ic) * k;
            for (int kk = 0; kk < k; ++kk) {
                const int off = kk - half;
                const int t0 = std::max(0, -off);
                const int t1 = std::min(len, len - off);
                double acc = 0.0;
                for (int bi = 0; bi < b; ++bi) {
                    const double* xr = x + (static_cast<size_t>(bi) * ci + ic) * len;
                    const double* gr = gy + (static_cast<size_t>(bi) * co + oc) * len;
                    for (int t = t0; t < t1; ++t) acc += gr[t] * xr[t + off];
                }
                gwr[kk] += acc;
            }
        }
        if (gbias) {
            double acc = 0.0;
            for (int bi = 0; bi < b; ++bi) {
                const double* gr = gy + (static_cast<size_t>(bi) * co + oc) * len;
                for (int t = 0; t < len; ++t) acc += gr[t];
            }
            gbias[oc] += acc;
        }
    }
}

}  // namespace radiotwin::kernels
