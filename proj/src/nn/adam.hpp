#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "nn/tensor.hpp"
#include "util/errors.hpp"

namespace forager::nn {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
struct AdamState {
    TensorT<T> m, v;

    static AdamState sized(const TensorT<T>& param) {
        return {TensorT<T>(param.shape()), TensorT<T>(param.shape())};
    }
};

// One bias-corrected Adam step; t counts from 1.
template <typename T>
void adam_step(TensorT<T>& param, const TensorT<T>& grad, TensorT<T>& m, TensorT<T>& v, int64_t t,
               const AdamHyper& h, const std::string& name = "") {
    if (t < 1) throw usage_error("adam_step: t must be >= 1");
    if (!param.same_shape(grad) || !param.same_shape(m) || !param.same_shape(v))
        throw usage_error("adam_step: shape mismatch on " + name);
    const T b1 = static_cast<T>(h.beta1), b2 = static_cast<T>(h.beta2);
    const T c1 = T(1) - static_cast<T>(std::pow(h.beta1, static_cast<double>(t)));
    const T c2 = T(1) - static_cast<T>(std::pow(h.beta2, static_cast<double>(t)));
    const T lr = static_cast<T>(h.lr), eps = static_cast<T>(h.eps);
    for (size_t i = 0; i < param.size(); ++i) {
        const T g = grad[i];
        if (!std::isfinite(static_cast<double>(g)))
            throw training_error("adam_step: non-finite gradient in " +
                                 (name.empty() ? std::string("<unnamed>") : name));
        m[i] = b1 * m[i] + (T(1) - b1) * g;
        v[i] = b2 * v[i] + (T(1) - b2) * g * g;
        const T mhat = m[i] / c1;
        const T vhat = v[i] / c2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

template <typename T>
void adam_step(TensorT<T>& param, const TensorT<T>& grad, AdamState<T>& st, int64_t t,
               const AdamHyper& h, const std::string& name = "") {
    adam_step(param, grad, st.m, st.v, t, h, name);
}

} // namespace forager::nn
