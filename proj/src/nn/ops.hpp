#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "nn/tensor.hpp"

// Forward and exact backward passes for the layers the agent needs.
// Conventions: feature maps are [C][H][W], kernels [Cout][Cin][K][K],
// vectors [N], weight matrices [M][N] mapping N -> M.

namespace forager::nn {

// --- Convolution, stride 1, output size == input size ---
// Zero padding of K-1 total: (K-1)/2 leading, K/2 trailing per axis.

namespace detail {

// Strict left-to-right FP reduction defeats vectorization; eight independent
// accumulator lanes keep the summation order fixed (hence deterministic)
// while letting the compiler use SIMD.
template <typename T>
T lane_dot(const T* a, const T* b, int n) {
    if (n < 16) { // lane bookkeeping costs more than it saves on short rows
        T s = 0;
        for (int x = 0; x < n; ++x) s += a[x] * b[x];
        return s;
    }
    T lanes[8] = {};
    int x = 0;
    for (; x + 8 <= n; x += 8)
        for (int l = 0; l < 8; ++l) lanes[l] += a[x + l] * b[x + l];
    for (; x < n; ++x) lanes[x & 7] += a[x] * b[x];
    return ((lanes[0] + lanes[4]) + (lanes[1] + lanes[5])) +
           ((lanes[2] + lanes[6]) + (lanes[3] + lanes[7]));
}

template <typename T>
T lane_sum(const T* a, int n) {
    if (n < 16) {
        T s = 0;
        for (int x = 0; x < n; ++x) s += a[x];
        return s;
    }
    T lanes[8] = {};
    int x = 0;
    for (; x + 8 <= n; x += 8)
        for (int l = 0; l < 8; ++l) lanes[l] += a[x + l];
    for (; x < n; ++x) lanes[x & 7] += a[x];
    return ((lanes[0] + lanes[4]) + (lanes[1] + lanes[5])) +
           ((lanes[2] + lanes[6]) + (lanes[3] + lanes[7]));
}

// Maps with small spatial extent but many channel-kernel products run faster
// through a transposed patch matrix: rows are output pixels, columns the
// (ci, ky, kx) axis, matching the kernel's memory order.
inline constexpr int kSmallSpatial = 256;

template <typename T>
std::vector<T> patches_t(const TensorT<T>& in, int k, int pb) {
    const int ci_n = in.dim(0), h = in.dim(1), wd = in.dim(2);
    const int cik = ci_n * k * k;
    std::vector<T> pt(static_cast<size_t>(h) * wd * cik, T(0));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < wd; ++x) {
            T* row = pt.data() + (static_cast<size_t>(y) * wd + x) * cik;
            for (int ci = 0; ci < ci_n; ++ci) {
                const T* in_c = in.data() + static_cast<size_t>(ci) * h * wd;
                for (int ky = 0; ky < k; ++ky) {
                    const int iy = y + ky - pb;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < k; ++kx) {
                        const int ix = x + kx - pb;
                        if (ix < 0 || ix >= wd) continue;
                        row[(ci * k + ky) * k + kx] = in_c[static_cast<size_t>(iy) * wd + ix];
                    }
                }
            }
        }
    return pt;
}

} // namespace detail

template <typename T>
TensorT<T> conv2d_same(const TensorT<T>& in, const TensorT<T>& w, const TensorT<T>& b) {
    if (in.rank() != 3 || w.rank() != 4)
        throw usage_error("conv2d_same: input must be [C,H,W] " + in.shape_str() +
                          ", kernels [Cout,Cin,K,K] " + w.shape_str());
    const int ci_n = in.dim(0), h = in.dim(1), wd = in.dim(2);
    const int co_n = w.dim(0), k = w.dim(2);
    if (w.dim(1) != ci_n || w.dim(3) != k)
        throw usage_error("conv2d_same: kernel shape " + w.shape_str() +
                          " does not match input " + in.shape_str());
    if (k > h + k - 1 || k > wd + k - 1 || k < 1)
        throw usage_error("conv2d_same: kernel size out of range");
    check_shape(b, {co_n}, "conv2d_same bias");
    const int pb = (k - 1) / 2;
    const int cik = ci_n * k * k;

    TensorT<T> out({co_n, h, wd});

    if (h * wd <= detail::kSmallSpatial && cik >= 16) {
        const auto pt = detail::patches_t(in, k, pb);
        for (int co = 0; co < co_n; ++co) {
            const T* wrow = w.data() + static_cast<size_t>(co) * cik;
            T* out_c = out.data() + static_cast<size_t>(co) * h * wd;
            const T bias = b[static_cast<size_t>(co)];
            for (int p = 0; p < h * wd; ++p)
                out_c[p] = bias + detail::lane_dot(wrow, pt.data() + static_cast<size_t>(p) * cik,
                                                   cik);
        }
        return out;
    }

    for (int co = 0; co < co_n; ++co) {
        T* out_c = out.data() + static_cast<size_t>(co) * h * wd;
        const T bias = b[static_cast<size_t>(co)];
        for (int i = 0; i < h * wd; ++i) out_c[i] = bias;
        for (int ci = 0; ci < ci_n; ++ci) {
            const T* in_c = in.data() + static_cast<size_t>(ci) * h * wd;
            for (int ky = 0; ky < k; ++ky) {
                const int y0 = std::max(0, pb - ky), y1 = std::min(h, h + pb - ky);
                for (int kx = 0; kx < k; ++kx) {
                    const T wv = w.at(co, ci, ky, kx);
                    const int x0 = std::max(0, pb - kx), x1 = std::min(wd, wd + pb - kx);
                    for (int y = y0; y < y1; ++y) {
                        T* orow = out_c + static_cast<size_t>(y) * wd;
                        const T* irow = in_c + static_cast<size_t>(y + ky - pb) * wd + (kx - pb);
                        for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
struct Conv2dGrad {
    TensorT<T> input;
    TensorT<T> kernels;
    TensorT<T> bias;
};

template <typename T>
Conv2dGrad<T> conv2d_same_backward(const TensorT<T>& in, const TensorT<T>& w,
                                   const TensorT<T>& dout, bool want_input = true) {
    const int ci_n = in.dim(0), h = in.dim(1), wd = in.dim(2);
    const int co_n = w.dim(0), k = w.dim(2);
    check_shape(dout, {co_n, h, wd}, "conv2d_same_backward dout");
    const int pb = (k - 1) / 2;
    const int cik = ci_n * k * k;

    Conv2dGrad<T> g{TensorT<T>(want_input ? in.shape() : std::vector<int>{0}),
                    TensorT<T>({co_n, ci_n, k, k}), TensorT<T>({co_n})};

    if (h * wd <= detail::kSmallSpatial && cik >= 16) {
        const auto pt = detail::patches_t(in, k, pb);
        std::vector<T> dcols(static_cast<size_t>(h) * wd * cik, T(0));
        for (int co = 0; co < co_n; ++co) {
            const T* dout_c = dout.data() + static_cast<size_t>(co) * h * wd;
            g.bias[static_cast<size_t>(co)] = detail::lane_sum(dout_c, h * wd);
            T* dwrow = g.kernels.data() + static_cast<size_t>(co) * cik;
            const T* wrow = w.data() + static_cast<size_t>(co) * cik;
            for (int p = 0; p < h * wd; ++p) {
                const T d = dout_c[p];
                const T* prow = pt.data() + static_cast<size_t>(p) * cik;
                for (int j = 0; j < cik; ++j) dwrow[j] += d * prow[j];
                if (want_input) {
                    T* drow = dcols.data() + static_cast<size_t>(p) * cik;
                    for (int j = 0; j < cik; ++j) drow[j] += d * wrow[j];
                }
            }
        }
        if (want_input) {
            // scatter the patch gradients back onto the input grid
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < wd; ++x) {
                    const T* row = dcols.data() + (static_cast<size_t>(y) * wd + x) * cik;
                    for (int ci = 0; ci < ci_n; ++ci) {
                        T* din_c = g.input.data() + static_cast<size_t>(ci) * h * wd;
                        for (int ky = 0; ky < k; ++ky) {
                            const int iy = y + ky - pb;
                            if (iy < 0 || iy >= h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                const int ix = x + kx - pb;
                                if (ix < 0 || ix >= wd) continue;
                                din_c[static_cast<size_t>(iy) * wd + ix] +=
                                    row[(ci * k + ky) * k + kx];
                            }
                        }
                    }
                }
        }
        return g;
    }

    for (int co = 0; co < co_n; ++co) {
        const T* dout_c = dout.data() + static_cast<size_t>(co) * h * wd;
        g.bias[static_cast<size_t>(co)] = detail::lane_sum(dout_c, h * wd);
        for (int ci = 0; ci < ci_n; ++ci) {
            const T* in_c = in.data() + static_cast<size_t>(ci) * h * wd;
            T* din_c = want_input ? g.input.data() + static_cast<size_t>(ci) * h * wd : nullptr;
            for (int ky = 0; ky < k; ++ky) {
                const int y0 = std::max(0, pb - ky), y1 = std::min(h, h + pb - ky);
                for (int kx = 0; kx < k; ++kx) {
                    const int x0 = std::max(0, pb - kx), x1 = std::min(wd, wd + pb - kx);
                    const T wv = w.at(co, ci, ky, kx);
                    T wsum = 0;
                    for (int y = y0; y < y1; ++y) {
                        const T* drow = dout_c + static_cast<size_t>(y) * wd;
                        const T* irow = in_c + static_cast<size_t>(y + ky - pb) * wd + (kx - pb);
                        wsum += detail::lane_dot(irow + x0, drow + x0, x1 - x0);
                        if (want_input) {
                            T* dirow = din_c + static_cast<size_t>(y + ky - pb) * wd + (kx - pb);
                            for (int x = x0; x < x1; ++x) dirow[x] += wv * drow[x];
                        }
                    }
                    g.kernels.at(co, ci, ky, kx) = wsum;
                }
            }
        }
    }
    return g;
}

template <typename T>
void grads_add_tensor(TensorT<T>& dst, const TensorT<T>& src) {
    if (!dst.same_shape(src)) throw usage_error("grads_add_tensor: shape mismatch");
    for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// --- Non-overlapping pooling, floor semantics ---

template <typename T>
TensorT<T> avg_pool(const TensorT<T>& in, int win) {
    if (in.rank() != 3) throw usage_error("avg_pool: input must be [C,H,W]");
    if (win < 1) throw usage_error("avg_pool: window must be >= 1");
    const int c_n = in.dim(0), h = in.dim(1), w = in.dim(2);
    const int oh = h / win, ow = w / win;
    if (oh < 1 || ow < 1)
        throw usage_error("avg_pool: window " + std::to_string(win) + " larger than input " +
                          in.shape_str());
    const T inv = T(1) / static_cast<T>(win * win);
    TensorT<T> out({c_n, oh, ow});
    for (int c = 0; c < c_n; ++c)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                T s = 0;
                for (int dy = 0; dy < win; ++dy) {
                    const T* row = in.data() +
                                   (static_cast<size_t>(c) * h + oy * win + dy) * w + ox * win;
                    for (int dx = 0; dx < win; ++dx) s += row[dx];
                }
                out.at(c, oy, ox) = s * inv;
            }
    return out;
}

template <typename T>
TensorT<T> avg_pool_backward(const TensorT<T>& dout, const std::vector<int>& in_shape, int win) {
    const int c_n = in_shape[0], h = in_shape[1], w = in_shape[2];
    check_shape(dout, {c_n, h / win, w / win}, "avg_pool_backward dout");
    const T inv = T(1) / static_cast<T>(win * win);
    TensorT<T> din(in_shape);
    const int oh = h / win, ow = w / win;
    for (int c = 0; c < c_n; ++c)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                const T g = dout.at(c, oy, ox) * inv;
                for (int dy = 0; dy < win; ++dy) {
                    T* row = din.data() +
                             (static_cast<size_t>(c) * h + oy * win + dy) * w + ox * win;
                    for (int dx = 0; dx < win; ++dx) row[dx] = g;
                }
            }
    return din;
}

template <typename T>
struct MaxPoolResult {
    TensorT<T> out;
    std::vector<int> argmax; // flat input index per output element; first max on ties
};

template <typename T>
MaxPoolResult<T> max_pool(const TensorT<T>& in, int win) {
    if (in.rank() != 3) throw usage_error("max_pool: input must be [C,H,W]");
    if (win < 1) throw usage_error("max_pool: window must be >= 1");
    const int c_n = in.dim(0), h = in.dim(1), w = in.dim(2);
    const int oh = h / win, ow = w / win;
    if (oh < 1 || ow < 1)
        throw usage_error("max_pool: window " + std::to_string(win) + " larger than input " +
                          in.shape_str());
    MaxPoolResult<T> r{TensorT<T>({c_n, oh, ow}), {}};
    r.argmax.resize(static_cast<size_t>(c_n) * oh * ow);
    size_t oi = 0;
    for (int c = 0; c < c_n; ++c)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox, ++oi) {
                T best = in.at(c, oy * win, ox * win);
                int best_idx = (c * h + oy * win) * w + ox * win;
                for (int dy = 0; dy < win; ++dy)
                    for (int dx = 0; dx < win; ++dx) {
                        const int idx = (c * h + oy * win + dy) * w + ox * win + dx;
                        const T v = in[static_cast<size_t>(idx)];
                        if (v > best) {
                            best = v;
                            best_idx = idx;
                        }
                    }
                r.out[oi] = best;
                r.argmax[oi] = best_idx;
            }
    return r;
}

template <typename T>
TensorT<T> max_pool_backward(const TensorT<T>& dout, const MaxPoolResult<T>& fwd,
                             const std::vector<int>& in_shape) {
    TensorT<T> din(in_shape);
    for (size_t i = 0; i < dout.size(); ++i)
        din[static_cast<size_t>(fwd.argmax[i])] += dout[i];
    return din;
}

// --- Elementwise activations ---

template <typename T>
TensorT<T> elu(const TensorT<T>& x) {
    TensorT<T> y(x.shape());
    for (size_t i = 0; i < x.size(); ++i)
        y[i] = x[i] > 0 ? x[i] : std::expm1(x[i]);
    return y;
}

// Needs the pre-activation input; d/dx = 1 for x>0, exp(x) otherwise.
template <typename T>
TensorT<T> elu_backward(const TensorT<T>& dout, const TensorT<T>& x) {
    if (!dout.same_shape(x)) throw usage_error("elu_backward: shape mismatch");
    TensorT<T> dx(x.shape());
    for (size_t i = 0; i < x.size(); ++i)
        dx[i] = dout[i] * (x[i] > 0 ? T(1) : std::exp(x[i]));
    return dx;
}

template <typename T>
TensorT<T> sigmoid(const TensorT<T>& x) {
    TensorT<T> y(x.shape());
    for (size_t i = 0; i < x.size(); ++i)
        y[i] = T(1) / (T(1) + std::exp(-x[i]));
    return y;
}

template <typename T>
TensorT<T> sigmoid_backward(const TensorT<T>& dout, const TensorT<T>& y) {
    if (!dout.same_shape(y)) throw usage_error("sigmoid_backward: shape mismatch");
    TensorT<T> dx(y.shape());
    for (size_t i = 0; i < y.size(); ++i) dx[i] = dout[i] * y[i] * (T(1) - y[i]);
    return dx;
}

template <typename T>
TensorT<T> tanh_act(const TensorT<T>& x) {
    TensorT<T> y(x.shape());
    for (size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
    return y;
}

template <typename T>
TensorT<T> tanh_backward(const TensorT<T>& dout, const TensorT<T>& y) {
    if (!dout.same_shape(y)) throw usage_error("tanh_backward: shape mismatch");
    TensorT<T> dx(y.shape());
    for (size_t i = 0; i < y.size(); ++i) dx[i] = dout[i] * (T(1) - y[i] * y[i]);
    return dx;
}

// --- Affine map: out = W x + b ---

template <typename T>
TensorT<T> linear(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
    if (w.rank() != 2 || x.rank() != 1)
        throw usage_error("linear: weight [M,N] and input [N] required, got " + w.shape_str() +
                          " and " + x.shape_str());
    const int m = w.dim(0), n = w.dim(1);
    if (x.dim(0) != n)
        throw usage_error("linear: inner dimensions disagree, weight " + w.shape_str() +
                          " vs input " + x.shape_str());
    check_shape(b, {m}, "linear bias");
    TensorT<T> out({m});
    for (int i = 0; i < m; ++i) {
        const T* wrow = w.data() + static_cast<size_t>(i) * n;
        out[static_cast<size_t>(i)] =
            b[static_cast<size_t>(i)] + detail::lane_dot(wrow, x.data(), n);
    }
    return out;
}

template <typename T>
struct LinearGrad {
    TensorT<T> input;
    TensorT<T> weight;
    TensorT<T> bias;
};

template <typename T>
LinearGrad<T> linear_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dout) {
    const int m = w.dim(0), n = w.dim(1);
    check_shape(dout, {m}, "linear_backward dout");
    LinearGrad<T> g{TensorT<T>({n}), TensorT<T>({m, n}), dout};
    for (int i = 0; i < m; ++i) {
        const T d = dout[static_cast<size_t>(i)];
        const T* wrow = w.data() + static_cast<size_t>(i) * n;
        T* gwrow = g.weight.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            gwrow[j] = d * x[static_cast<size_t>(j)];
            g.input[static_cast<size_t>(j)] += d * wrow[j];
        }
    }
    return g;
}

// In-place accumulating variants used by the training loop.
template <typename T>
void linear_backward_acc(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dout,
                         TensorT<T>& dw, TensorT<T>& db, TensorT<T>* dx) {
    const int m = w.dim(0), n = w.dim(1);
    for (int i = 0; i < m; ++i) {
        const T d = dout[static_cast<size_t>(i)];
        db[static_cast<size_t>(i)] += d;
        const T* wrow = w.data() + static_cast<size_t>(i) * n;
        T* dwrow = dw.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) dwrow[j] += d * x[static_cast<size_t>(j)];
        if (dx)
            for (int j = 0; j < n; ++j) (*dx)[static_cast<size_t>(j)] += d * wrow[j];
    }
}

} // namespace forager::nn
