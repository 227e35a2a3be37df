#include "radiotwin/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

#include "radiotwin/kernels.hpp"
#include "radiotwin/spectral.hpp"

namespace radiotwin::ad {

namespace {

[[noreturn]] void shape_error(const std::string& prim, const std::string& detail) {
    throw std::invalid_argument(prim + ": " + detail);
}

std::string shape_str(const std::vector<int>& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

TensorPtr make_node(std::vector<int> shape, std::vector<TensorPtr> parents) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data.assign(static_cast<size_t>(impl->numel()), 0.0);
    impl->parents = std::move(parents);
    for (const auto& p : impl->parents)
        if (p && p->requires_grad) impl->requires_grad = true;
    return impl;
}

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data.assign(static_cast<size_t>(impl->numel()), 0.0);
    impl->requires_grad = requires_grad;
    return Tensor(impl);
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data,
                         bool requires_grad) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    if (static_cast<int64_t>(data.size()) != impl->numel())
        shape_error("from_data", "data size " + std::to_string(data.size()) +
                                     " does not match shape " + shape_str(impl->shape));
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    return Tensor(impl);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_data({1}, {v}, requires_grad);
}

void Tensor::backward() const {
    if (!impl_ || impl_->numel() != 1)
        throw std::invalid_argument("backward: root must be a defined scalar");
    if (!impl_->requires_grad) return;

    // Post-order DFS over grad-requiring parents.
    std::vector<TensorImpl*> order;
    std::unordered_set<TensorImpl*> seen;
    struct Frame {
        TensorImpl* node;
        size_t child = 0;
    };
    std::vector<Frame> stack{{impl_.get()}};
    seen.insert(impl_.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.child < f.node->parents.size()) {
            TensorImpl* p = f.node->parents[f.child++].get();
            if (p && p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    impl_->ensure_grad();
    impl_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

// ---- elementwise ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        shape_error("add", "shape mismatch " + shape_str(a.shape()) + " vs " +
                               shape_str(b.shape()));
    auto out = make_node(a.shape(), {a.impl(), b.impl()});
    const auto& av = a.vec();
    const auto& bv = b.vec();
    for (size_t i = 0; i < out->data.size(); ++i) out->data[i] = av[i] + bv[i];
    if (out->requires_grad) {
        auto ai = a.impl(), bi = b.impl();
        out->backward_fn = [ai, bi](TensorImpl& self) {
            if (ai->requires_grad) {
                ai->ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i) ai->grad[i] += self.grad[i];
            }
            if (bi->requires_grad) {
                bi->ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i) bi->grad[i] += self.grad[i];
            }
        };
    }
    return Tensor(out);
}

Tensor scale(const Tensor& a, double c) {
    auto out = make_node(a.shape(), {a.impl()});
    const auto& av = a.vec();
    for (size_t i = 0; i < out->data.size(); ++i) out->data[i] = c * av[i];
    if (out->requires_grad) {
        auto ai = a.impl();
        out->backward_fn = [ai, c](TensorImpl& self) {
            ai->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) ai->grad[i] += c * self.grad[i];
        };
    }
    return Tensor(out);
}

// ---- dense ------------------------------------------------------------------

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    if (x.rank() != 2 || w.rank() != 2)
        shape_error("linear", "expects rank-2 input and weight");
    const int b = x.dim(0), in = x.dim(1), out_dim = w.dim(1);
    if (w.dim(0) != in)
        shape_error("linear", "input features " + std::to_string(in) +
                                  " != weight rows " + std::to_string(w.dim(0)));
    const bool has_bias = bias.defined();
    if (has_bias && (bias.rank() != 1 || bias.dim(0) != out_dim))
        shape_error("linear", "bias shape " + shape_str(bias.shape()) +
                                  " != (" + std::to_string(out_dim) + ")");

    std::vector<TensorPtr> parents{x.impl(), w.impl()};
    if (has_bias) parents.push_back(bias.impl());
    auto out = make_node({b, out_dim}, std::move(parents));
    kernels::linear_forward(x.data(), w.data(), has_bias ? bias.data() : nullptr,
                            out->data.data(), b, in, out_dim);
    if (out->requires_grad) {
        auto xi = x.impl(), wi = w.impl();
        auto bi = has_bias ? bias.impl() : nullptr;
        out->backward_fn = [xi, wi, bi, b, in, out_dim](TensorImpl& self) {
            if (xi->requires_grad) {
                xi->ensure_grad();
                kernels::linear_backward_input(self.grad.data(), wi->data.data(),
                                               xi->grad.data(), b, in, out_dim);
            }
            if (wi->requires_grad) {
                wi->ensure_grad();
                double* gb = nullptr;
                if (bi && bi->requires_grad) {
                    bi->ensure_grad();
                    gb = bi->grad.data();
                }
                kernels::linear_backward_params(xi->data.data(), self.grad.data(),
                                                wi->grad.data(), gb, b, in, out_dim);
            } else if (bi && bi->requires_grad) {
                bi->ensure_grad();
                for (int r = 0; r < b; ++r)
                    for (int o = 0; o < out_dim; ++o)
                        bi->grad[o] += self.grad[size_t(r) * out_dim + o];
            }
        };
    }
    return Tensor(out);
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias) {
    if (x.rank() != 3 || w.rank() != 3)
        shape_error("conv1d", "expects rank-3 input and weight");
    const int b = x.dim(0), ci = x.dim(1), len = x.dim(2);
    const int co = w.dim(0), k = w.dim(2);
    if (w.dim(1) != ci)
        shape_error("conv1d", "input channels " + std::to_string(ci) +
                                  " != weight channels " + std::to_string(w.dim(1)));
    if (k % 2 == 0) shape_error("conv1d", "kernel width must be odd");
    const bool has_bias = bias.defined();
    if (has_bias && (bias.rank() != 1 || bias.dim(0) != co))
        shape_error("conv1d", "bias shape mismatch");

    std::vector<TensorPtr> parents{x.impl(), w.impl()};
    if (has_bias) parents.push_back(bias.impl());
    auto out = make_node({b, co, len}, std::move(parents));
    kernels::conv1d_forward(x.data(), w.data(), has_bias ? bias.data() : nullptr,
                            out->data.data(), b, ci, co, len, k);
    if (out->requires_grad) {
        auto xi = x.impl(), wi = w.impl();
        auto bi = has_bias ? bias.impl() : nullptr;
        out->backward_fn = [xi, wi, bi, b, ci, co, len, k](TensorImpl& self) {
            if (xi->requires_grad) {
                xi->ensure_grad();
                kernels::conv1d_backward_input(self.grad.data(), wi->data.data(),
                                               xi->grad.data(), b, ci, co, len, k);
            }
            if (wi->requires_grad) {
                wi->ensure_grad();
                double* gb = nullptr;
                if (bi && bi->requires_grad) {
                    bi->ensure_grad();
                    gb = bi->grad.data();
                }
                kernels::conv1d_backward_params(xi->data.data(), self.grad.data(),
                                                wi->grad.data(), gb, b, ci, co, len, k);
            }
        };
    }
    return Tensor(out);
}

// ---- pooling / resizing -------------------------------------------------------

Tensor maxpool1d(const Tensor& x, int width) {
    if (x.rank() != 3) shape_error("maxpool1d", "expects rank-3 input");
    if (width < 1) shape_error("maxpool1d", "width must be >= 1");
    const int b = x.dim(0), c = x.dim(1), len = x.dim(2);
    const int out_len = len / width;
    if (out_len < 1) shape_error("maxpool1d", "input shorter than pool width");

    auto out = make_node({b, c, out_len}, {x.impl()});
    auto argmax = std::make_shared<std::vector<int>>(out->data.size());
    const double* xd = x.data();
    for (int r = 0; r < b * c; ++r) {
        const double* row = xd + static_cast<size_t>(r) * len;
        double* orow = out->data.data() + static_cast<size_t>(r) * out_len;
        int* arow = argmax->data() + static_cast<size_t>(r) * out_len;
        for (int t = 0; t < out_len; ++t) {
            int best = t * width;
            double bv = row[best];
            for (int j = 1; j < width; ++j)
                if (row[t * width + j] > bv) {
                    bv = row[t * width + j];
                    best = t * width + j;
                }
            orow[t] = bv;
            arow[t] = best;
        }
    }
    if (out->requires_grad) {
        auto xi = x.impl();
        out->backward_fn = [xi, argmax, len, out_len](TensorImpl& self) {
            xi->ensure_grad();
            const int rows = static_cast<int>(self.grad.size()) / out_len;
            for (int r = 0; r < rows; ++r)
                for (int t = 0; t < out_len; ++t)
                    xi->grad[static_cast<size_t>(r) * len +
                             (*argmax)[static_cast<size_t>(r) * out_len + t]] +=
                        self.grad[static_cast<size_t>(r) * out_len + t];
        };
    }
    return Tensor(out);
}

Tensor avgpool1d(const Tensor& x, int width) {
    if (x.rank() != 3) shape_error("avgpool1d", "expects rank-3 input");
    if (width < 1) shape_error("avgpool1d", "width must be >= 1");
    const int b = x.dim(0), c = x.dim(1), len = x.dim(2);
    const int out_len = len / width;
    if (out_len < 1) shape_error("avgpool1d", "input shorter than pool width");

    auto out = make_node({b, c, out_len}, {x.impl()});
    const double inv = 1.0 / width;
    const double* xd = x.data();
    for (int r = 0; r < b * c; ++r) {
        const double* row = xd + static_cast<size_t>(r) * len;
        double* orow = out->data.data() + static_cast<size_t>(r) * out_len;
        for (int t = 0; t < out_len; ++t) {
            double acc = 0.0;
            for (int j = 0; j < width; ++j) acc += row[t * width + j];
            orow[t] = acc * inv;
        }
    }
    if (out->requires_grad) {
        auto xi = x.impl();
        out->backward_fn = [xi, width, len, out_len, inv](TensorImpl& self) {
            xi->ensure_grad();
            const int rows = static_cast<int>(self.grad.size()) / out_len;
            for (int r = 0; r < rows; ++r)
                for (int t = 0; t < out_len; ++t) {
                    const double g = self.grad[static_cast<size_t>(r) * out_len + t] * inv;
                    for (int j = 0; j < width; ++j)
                        xi->grad[static_cast<size_t>(r) * len + t * width + j] += g;
                }
        };
    }
    return Tensor(out);
}

Tensor upsample_nn1d(const Tensor& x, int factor) {
    if (x.rank() != 3) shape_error("upsample_nn1d", "expects rank-3 input");
    if (factor < 1) shape_error("upsample_nn1d", "factor must be >= 1");
    const int b = x.dim(0), c = x.dim(1), len = x.dim(2);
    const int out_len = len * factor;
    auto out = make_node({b, c, out_len}, {x.impl()});
    const double* xd = x.data();
    for (int r = 0; r < b * c; ++r) {
        const double* row = xd + static_cast<size_t>(r) * len;
        double* orow = out->data.data() + static_cast<size_t>(r) * out_len;
        for (int t = 0; t < out_len; ++t) orow[t] = row[t / factor];
    }
    if (out->requires_grad) {
        auto xi = x.impl();
        out->backward_fn = [xi, factor, len, out_len](TensorImpl& self) {
            xi->ensure_grad();
            const int rows = static_cast<int>(self.grad.size()) / out_len;
            for (int r = 0; r < rows; ++r)
                for (int t = 0; t < out_len; ++t)
                    xi->grad[static_cast<size_t>(r) * len + t / factor] +=
                        self.grad[static_cast<size_t>(r) * out_len + t];
        };
    }
    return Tensor(out);
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.rank() != 3 || b.rank() != 3)
        shape_error("concat", "expects rank-3 inputs");
    if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2))
        shape_error("concat", "batch/length mismatch " + shape_str(a.shape()) +
                                  " vs " + shape_str(b.shape()));
    const int bs = a.dim(0), ca = a.dim(1), cb = b.dim(1), len = a.dim(2);
    auto out = make_node({bs, ca + cb, len}, {a.impl(), b.impl()});
    for (int bi = 0; bi < bs; ++bi) {
        std::memcpy(out->data.data() + (static_cast<size_t>(bi) * (ca + cb)) * len,
                    a.data() + static_cast<size_t>(bi) * ca * len,
                    sizeof(double) * ca * len);
        std::memcpy(out->data.data() + (static_cast<size_t>(bi) * (ca + cb) + ca) * len,
                    b.data() + static_cast<size_t>(bi) * cb * len,
                    sizeof(double) * cb * len);
    }
    if (out->requires_grad) {
        auto ai = a.impl(), bimpl = b.impl();
        out->backward_fn = [ai, bimpl, bs, ca, cb, len](TensorImpl& self) {
            for (int bi = 0; bi < bs; ++bi) {
                const double* g = self.grad.data() + static_cast<size_t>(bi) * (ca + cb) * len;
                if (ai->requires_grad) {
                    ai->ensure_grad();
                    double* ga = ai->grad.data() + static_cast<size_t>(bi) * ca * len;
                    for (int i = 0; i < ca * len; ++i) ga[i] += g[i];
                }
                if (bimpl->requires_grad) {
                    bimpl->ensure_grad();
                    double* gb = bimpl->grad.data() + static_cast<size_t>(bi) * cb * len;
                    for (int i = 0; i < cb * len; ++i) gb[i] += g[ca * len + i];
                }
            }
        };
    }
    return Tensor(out);
}

Tensor dropout(const Tensor& x, double p, bool training, Rng& rng) {
    if (p < 0.0 || p >= 1.0) shape_error("dropout", "p must be in [0, 1)");
    if (!training || p == 0.0) return x;
    auto out = make_node(x.shape(), {x.impl()});
    auto mask = std::make_shared<std::vector<double>>(out->data.size());
    const double keep_scale = 1.0 / (1.0 - p);
    const auto& xv = x.vec();
    for (size_t i = 0; i < xv.size(); ++i) {
        const double m = rng.uniform() >= p ? keep_scale : 0.0;
        (*mask)[i] = m;
        out->data[i] = xv[i] * m;
    }
    if (out->requires_grad) {
        auto xi = x.impl();
        out->backward_fn = [xi, mask](TensorImpl& self) {
            xi->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i)
                xi->grad[i] += self.grad[i] * (*mask)[i];
        };
    }
    return Tensor(out);
}

Tensor reflect_pad1d(const Tensor& x, int left, int right) {
    if (x.rank() != 3) shape_error("reflect_pad1d", "expects rank-3 input");
    const int b = x.dim(0), c = x.dim(1), len = x.dim(2);
    if (left < 0 || right < 0 || left > len - 1 || right > len - 1)
        shape_error("reflect_pad1d", "pad must be in [0, length-1]");
    const int out_len = len + left + right;
    auto out = make_node({b, c, out_len}, {x.impl()});
    auto src_index = [len, left](int j) {
        if (j < left) return left - j;
        if (j < left + len) return j - left;
        return 2 * len - 2 - (j - left);
    };
    const double* xd = x.data();
    for (int r = 0; r < b * c; ++r) {
        const double* row = xd + static_cast<size_t>(r) * len;
        double* orow = out->data.data() + static_cast<size_t>(r) * out_len;
        for (int j = 0; j < out_len; ++j) orow[j] = row[src_index(j)];
    }
    if (out->requires_grad) {
        auto xi = x.impl();
        out->backward_fn = [xi, src_index, len, out_len](TensorImpl& self) {
            xi->ensure_grad();
            const int rows = static_cast<int>(self.grad.size()) / out_len;
            for (int r = 0; r < rows; ++r)
                for (int j = 0; j < out_len; ++j)
                    xi->grad[static_cast<size_t>(r) * len + src_index(j)] +=
                        self.grad[static_cast<size_t>(r) * out_len + j];
        };
    }
    return Tensor(out);
}

Tensor crop1d(const Tensor& x, int left, int right) {
    if (x.rank() != 3) shape_error("crop1d", "expects rank-3 input");
    const int b = x.dim(0), c = x.dim(1), len = x.dim(2);
    const int out_len = len - left - right;
    if (left < 0 || right < 0 || out_len < 1)
        shape_error("crop1d", "crop exceeds length");
    auto out = make_node({b, c, out_len}, {x.impl()});
    const double* xd = x.data();
    for (int r = 0; r < b * c; ++r)
        std::memcpy(out->data.data() + static_cast<size_t>(r) * out_len,
                    xd + static_cast<size_t>(r) * len + left,
                    sizeof(double) * out_len);
    if (out->requires_grad) {
        auto xi = x.impl();
        out->backward_fn = [xi, left, len, out_len](TensorImpl& self) {
            xi->ensure_grad();
            const int rows = static_cast<int>(self.grad.size()) / out_len;
            for (int r = 0; r < rows; ++r)
                for (int j = 0; j < out_len; ++j)
                    xi->grad[static_cast<size_t>(r) * len + left + j] +=
                        self.grad[static_cast<size_t>(r) * out_len + j];
        };
    }
    return Tensor(out);
}

Tensor reshape(const Tensor& x, std::vector<int> new_shape) {
    int64_t n = 1;
    for (int d : new_shape) n *= d;
    if (n != x.numel())
        shape_error("reshape", "numel mismatch " + shape_str(x.shape()) + " -> " +
                                   shape_str(new_shape));
    auto out = make_node(std::move(new_shape), {x.impl()});
    out->data = x.vec();
    if (out->requires_grad) {
        auto xi = x.impl();
        out->backward_fn = [xi](TensorImpl& self) {
            xi->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) xi->grad[i] += self.grad[i];
        };
    }
    return Tensor(out);
}

// ---- activations ---------------------------------------------------------------

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;  // 1/sqrt(2 pi)
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);
constexpr double kGeluCubic = 0.044715;
}  // namespace

Tensor gelu(const Tensor& x, GeluMode mode) {
    auto out = make_node(x.shape(), {x.impl()});
    const auto& xv = x.vec();
    if (mode == GeluMode::exact) {
        for (size_t i = 0; i < xv.size(); ++i) {
            const double phi = 0.5 * (1.0 + std::erf(xv[i] / kSqrt2));
            out->data[i] = xv[i] * phi;
        }
    } else {
        for (size_t i = 0; i < xv.size(); ++i) {
            const double v = xv[i];
            const double u = kSqrt2OverPi * (v + kGeluCubic * v * v * v);
            out->data[i] = 0.5 * v * (1.0 + std::tanh(u));
        }
    }
    if (out->requires_grad) {
        auto xi = x.impl();
        out->backward_fn = [xi, mode](TensorImpl& self) {
            xi->ensure_grad();
            const auto& v = xi->data;
            if (mode == GeluMode::exact) {
                for (size_t i = 0; i < self.grad.size(); ++i) {
                    const double phi = 0.5 * (1.0 + std::erf(v[i] / kSqrt2));
                    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v[i] * v[i]);
                    xi->grad[i] += self.grad[i] * (phi + v[i] * pdf);
                }
            } else {
                for (size_t i = 0; i < self.grad.size(); ++i) {
                    const double u = kSqrt2OverPi * (v[i] + kGeluCubic * v[i] * v[i] * v[i]);
                    const double th = std::tanh(u);
                    const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * v[i] * v[i]);
                    xi->grad[i] += self.grad[i] *
                                   (0.5 * (1.0 + th) + 0.5 * v[i] * (1.0 - th * th) * du);
                }
            }
        };
    }
    return Tensor(out);
}

// ---- DCT ------------------------------------------------------------------------

namespace {

// Row k holds the synthesis basis (1/N for k=0, (2/N) cos(...) otherwise),
// laid out for the shared dense kernels: y = X * basis.
const std::vector<double>& idct_matrix(int n) {
    static std::mutex mtx;
    static std::map<int, std::unique_ptr<std::vector<double>>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto& entry = cache[n];
    if (!entry) {
        const auto& c = spectral::cos_basis(n);
        entry = std::make_unique<std::vector<double>>(size_t(n) * n);
        for (int k = 0; k < n; ++k) {
            const double s = (k == 0 ? 1.0 : 2.0) / n;
            for (int i = 0; i < n; ++i)
                (*entry)[size_t(k) * n + i] = s * c[size_t(k) * n + i];
        }
    }
    return *entry;
}

}  // namespace

Tensor idct2_rows(const Tensor& x) {
    if (x.rank() != 2) shape_error("idct2_rows", "expects rank-2 input");
    const int b = x.dim(0), n = x.dim(1);
    const auto& basis = idct_matrix(n);
    auto out = make_node({b, n}, {x.impl()});
    kernels::linear_forward(x.data(), basis.data(), nullptr, out->data.data(), b, n, n);
    if (out->requires_grad) {
        auto xi = x.impl();
        out->backward_fn = [xi, b, n](TensorImpl& self) {
            xi->ensure_grad();
            kernels::linear_backward_input(self.grad.data(), idct_matrix(n).data(),
                                           xi->grad.data(), b, n, n);
        };
    }
    return Tensor(out);
}

// ---- losses -----------------------------------------------------------------------

Tensor loss_mae(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        shape_error("loss_mae", "shape mismatch " + shape_str(pred.shape()) + " vs " +
                                    shape_str(target.shape()));
    auto out = make_node({1}, {pred.impl(), target.impl()});
    const auto& pv = pred.vec();
    const auto& tv = target.vec();
    double acc = 0.0;
    for (size_t i = 0; i < pv.size(); ++i) acc += std::abs(pv[i] - tv[i]);
    const double inv_n = 1.0 / static_cast<double>(pv.size());
    out->data[0] = acc * inv_n;
    if (out->requires_grad) {
        auto pi = pred.impl(), ti = target.impl();
        out->backward_fn = [pi, ti, inv_n](TensorImpl& self) {
            const double g = self.grad[0] * inv_n;
            if (pi->requires_grad) pi->ensure_grad();
            if (ti->requires_grad) ti->ensure_grad();
            for (size_t i = 0; i < pi->data.size(); ++i) {
                const double s = sgn(pi->data[i] - ti->data[i]) * g;
                if (pi->requires_grad) pi->grad[i] += s;
                if (ti->requires_grad) ti->grad[i] -= s;
            }
        };
    }
    return Tensor(out);
}

namespace {

// Shared body of the two derivative-regularized losses. Tensors are rank-2
// (batch, length); value and sign-based gradients per level:
//   mean |d0| + l1 * sum |d1| + l2 * sum |d2|
// with d0 = pred - target, d1/d2 its first/second forward differences.
double level_loss_value(const double* p, const double* t, int len, double l1, double l2) {
    double mae = 0.0;
    for (int i = 0; i < len; ++i) mae += std::abs(p[i] - t[i]);
    mae /= len;
    double term1 = 0.0;
    for (int i = 0; i + 1 < len; ++i)
        term1 += std::abs((p[i + 1] - t[i + 1]) - (p[i] - t[i]));
    double term2 = 0.0;
    for (int i = 0; i + 2 < len; ++i)
        term2 += std::abs((p[i + 2] - t[i + 2]) - 2.0 * (p[i + 1] - t[i + 1]) +
                          (p[i] - t[i]));
    return mae + l1 * term1 + l2 * term2;
}

void level_loss_grad(const double* p, const double* t, int len, double l1, double l2,
                     double g, double* gp, double* gt) {
    const double gm = g / len;
    for (int i = 0; i < len; ++i) {
        const double s = sgn(p[i] - t[i]) * gm;
        if (gp) gp[i] += s;
        if (gt) gt[i] -= s;
    }
    for (int i = 0; i + 1 < len; ++i) {
        const double d1 = (p[i + 1] - t[i + 1]) - (p[i] - t[i]);
        const double s = sgn(d1) * l1 * g;
        if (gp) {
            gp[i + 1] += s;
            gp[i] -= s;
        }
        if (gt) {
            gt[i + 1] -= s;
            gt[i] += s;
        }
    }
    for (int i = 0; i + 2 < len; ++i) {
        const double d2 = (p[i + 2] - t[i + 2]) - 2.0 * (p[i + 1] - t[i + 1]) +
                          (p[i] - t[i]);
        const double s = sgn(d2) * l2 * g;
        if (gp) {
            gp[i + 2] += s;
            gp[i + 1] -= 2.0 * s;
            gp[i] += s;
        }
        if (gt) {
            gt[i + 2] -= s;
            gt[i + 1] += 2.0 * s;
            gt[i] -= s;
        }
    }
}

}  // namespace

Tensor loss_deep_l1(const std::vector<Tensor>& preds,
                    const std::vector<Tensor>& targets,
                    double lambda1, double lambda2) {
    if (preds.size() != 4 || targets.size() != 4)
        shape_error("loss_deep_l1", "expects 4 prediction and 4 target levels");
    const int batch = preds[0].dim(0);
    for (size_t k = 0; k < preds.size(); ++k) {
        if (preds[k].rank() != 2 || preds[k].shape() != targets[k].shape())
            shape_error("loss_deep_l1", "level " + std::to_string(k + 1) +
                                            " shape mismatch " +
                                            shape_str(preds[k].shape()) + " vs " +
                                            shape_str(targets[k].shape()));
        if (preds[k].dim(0) != batch)
            shape_error("loss_deep_l1", "inconsistent batch size across levels");
    }

    std::vector<TensorPtr> parents;
    for (const auto& p : preds) parents.push_back(p.impl());
    for (const auto& t : targets) parents.push_back(t.impl());
    auto out = make_node({1}, std::move(parents));

    double acc = 0.0;
    for (size_t k = 0; k < preds.size(); ++k) {
        const int len = preds[k].dim(1);
        for (int bi = 0; bi < batch; ++bi)
            acc += level_loss_value(preds[k].data() + static_cast<size_t>(bi) * len,
                                    targets[k].data() + static_cast<size_t>(bi) * len,
                                    len, lambda1, lambda2);
    }
    out->data[0] = acc / batch;

    if (out->requires_grad) {
        std::vector<TensorPtr> pi, ti;
        for (const auto& p : preds) pi.push_back(p.impl());
        for (const auto& t : targets) ti.push_back(t.impl());
        out->backward_fn = [pi, ti, batch, lambda1, lambda2](TensorImpl& self) {
            const double g = self.grad[0] / batch;
            for (size_t k = 0; k < pi.size(); ++k) {
                const int len = pi[k]->shape[1];
                double* gp = nullptr;
                double* gt = nullptr;
                if (pi[k]->requires_grad) {
                    pi[k]->ensure_grad();
                    gp = pi[k]->grad.data();
                }
                if (ti[k]->requires_grad) {
                    ti[k]->ensure_grad();
                    gt = ti[k]->grad.data();
                }
                if (!gp && !gt) continue;
                for (int bi = 0; bi < batch; ++bi)
                    level_loss_grad(pi[k]->data.data() + static_cast<size_t>(bi) * len,
                                    ti[k]->data.data() + static_cast<size_t>(bi) * len,
                                    len, lambda1, lambda2, g,
                                    gp ? gp + static_cast<size_t>(bi) * len : nullptr,
                                    gt ? gt + static_cast<size_t>(bi) * len : nullptr);
            }
        };
    }
    return Tensor(out);
}

Tensor loss_refine_l2(const Tensor& pred, const Tensor& target,
                      double lambda1, double lambda2) {
    if (pred.rank() != 2 || pred.shape() != target.shape())
        shape_error("loss_refine_l2", "shape mismatch " + shape_str(pred.shape()) +
                                          " vs " + shape_str(target.shape()));
    const int batch = pred.dim(0), len = pred.dim(1);
    auto out = make_node({1}, {pred.impl(), target.impl()});
    double acc = 0.0;
    for (int bi = 0; bi < batch; ++bi)
        acc += level_loss_value(pred.data() + static_cast<size_t>(bi) * len,
                                target.data() + static_cast<size_t>(bi) * len, len,
                                lambda1, lambda2);
    out->data[0] = acc / batch;
    if (out->requires_grad) {
        auto pi = pred.impl(), ti = target.impl();
        out->backward_fn = [pi, ti, batch, len, lambda1, lambda2](TensorImpl& self) {
            const double g = self.grad[0] / batch;
            double* gp = nullptr;
            double* gt = nullptr;
            if (pi->requires_grad) {
                pi->ensure_grad();
                gp = pi->grad.data();
            }
            if (ti->requires_grad) {
                ti->ensure_grad();
                gt = ti->grad.data();
            }
            for (int bi = 0; bi < batch; ++bi)
                level_loss_grad(pi->data.data() + static_cast<size_t>(bi) * len,
                                ti->data.data() + static_cast<size_t>(bi) * len, len,
                                lambda1, lambda2, g,
                                gp ? gp + static_cast<size_t>(bi) * len : nullptr,
                                gt ? gt + static_cast<size_t>(bi) * len : nullptr);
        };
    }
    return Tensor(out);
}

// ---- optimizer ------------------------------------------------------------------

void adam_step(std::vector<Tensor>& params, AdamState& state) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i].numel(), 0.0);
            state.v[i].assign(params[i].numel(), 0.0);
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        p.impl()->ensure_grad();
        double* w = p.data();
        const double* g0 = p.grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        const int64_t n = p.numel();
        for (int64_t j = 0; j < n; ++j) {
            const double g = g0[j] + state.weight_decay * w[j];
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double lr, double weight_decay)
    : params_(std::move(params)) {
    state_.lr = lr;
    state_.weight_decay = weight_decay;
}

void AdamOptimizer::step() { adam_step(params_, state_); }

void AdamOptimizer::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

// ---- finite differences -------------------------------------------------------------

double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                  const GradCheckOptions& opt) {
    for (auto& p : params) p.zero_grad();
    Tensor loss = f();
    loss.backward();

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params)
        analytic.push_back(p.has_grad() ? p.grad_vec()
                                        : std::vector<double>(p.numel(), 0.0));

    Rng rng(opt.seed);
    double max_rel = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi];
        const int64_t n = p.numel();
        std::vector<int64_t> coords;
        if (n <= opt.max_coords_per_tensor) {
            coords.resize(n);
            for (int64_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            coords.resize(opt.max_coords_per_tensor);
            for (auto& c : coords) c = static_cast<int64_t>(rng.index(n));
        }
        for (int64_t idx : coords) {
            if (opt.skip_coord && opt.skip_coord(p, idx)) continue;
            const double saved = p.data()[idx];
            p.data()[idx] = saved + opt.epsilon;
            const double f_plus = f().value();
            p.data()[idx] = saved - opt.epsilon;
            const double f_minus = f().value();
            p.data()[idx] = saved;
            const double numeric = (f_plus - f_minus) / (2.0 * opt.epsilon);
            const double a = analytic[pi][idx];
            const double rel = std::abs(a - numeric) /
                               std::max({std::abs(a), std::abs(numeric), 0.01});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

// ---- checkpoints ----------------------------------------------------------------------

namespace {
constexpr char kMagic[4] = {'R', 'T', 'C', 'P'};
constexpr uint32_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: unexpected end of file");
    return v;
}
}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
    out.write(kMagic, 4);
    write_pod(out, kCheckpointVersion);
    write_pod(out, static_cast<uint32_t>(params.size()));
    for (const auto& [name, t] : params) {
        write_pod(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(out, static_cast<uint32_t>(t.rank()));
        for (int d : t.shape()) write_pod(out, static_cast<uint64_t>(d));
        for (int64_t i = 0; i < t.numel(); ++i)
            write_pod(out, static_cast<float>(t.data()[i]));
    }
    if (!out) throw std::runtime_error("checkpoint: short write to " + path);
}

void load_checkpoint(const std::string& path,
                     std::vector<std::pair<std::string, Tensor>>& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const auto version = read_pod<uint32_t>(in);
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " +
                                 std::to_string(version));
    const auto count = read_pod<uint32_t>(in);

    std::map<std::string, std::pair<std::vector<int>, std::vector<float>>> records;
    for (uint32_t r = 0; r < count; ++r) {
        const auto name_len = read_pod<uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto rank = read_pod<uint32_t>(in);
        std::vector<int> dims(rank);
        int64_t numel = 1;
        for (auto& d : dims) {
            d = static_cast<int>(read_pod<uint64_t>(in));
            numel *= d;
        }
        std::vector<float> values(numel);
        in.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(numel * sizeof(float)));
        if (!in) throw std::runtime_error("checkpoint: truncated payload in " + path);
        records[name] = {std::move(dims), std::move(values)};
    }

    for (auto& [name, t] : params) {
        auto it = records.find(name);
        if (it == records.end())
            throw std::runtime_error("checkpoint: missing parameter " + name);
        if (it->second.first != t.shape())
            throw std::runtime_error("checkpoint: shape mismatch for " + name);
        const auto& values = it->second.second;
        for (int64_t i = 0; i < t.numel(); ++i)
            t.data()[i] = static_cast<double>(values[i]);
    }
}

}  // namespace radiotwin::ad
