#pragma once

// Independent oracles used by the test suites. These deliberately avoid the
// implementation paths they check: finite differences for gradients,
// brute-force discounted sums for GAE, direct convolution for smoothing.

#include <cmath>
#include <functional>
#include <vector>

#include "nn/tensor.hpp"
#include "util/rng.hpp"

namespace forager::testing {

// Central finite difference of a scalar function at x, one coordinate.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Checks an analytic gradient of scalar_fn w.r.t. every element of `param`
// against central differences. Returns the max relative error, where the
// denominator is max(|analytic|, |numeric|, floor).
template <typename T>
double max_rel_grad_error(nn::TensorT<T>& param, const nn::TensorT<T>& analytic,
                          const std::function<double()>& scalar_fn, double h = 1e-5,
                          double floor = 1e-4) {
    double worst = 0.0;
    for (size_t i = 0; i < param.size(); ++i) {
        const T keep = param[i];
        param[i] = keep + static_cast<T>(h);
        const double fp = scalar_fn();
        param[i] = keep - static_cast<T>(h);
        const double fm = scalar_fn();
        param[i] = keep;
        const double num = (fp - fm) / (2.0 * h);
        const double ana = static_cast<double>(analytic[i]);
        const double denom = std::max({std::abs(num), std::abs(ana), floor});
        worst = std::max(worst, std::abs(num - ana) / denom);
    }
    return worst;
}

template <typename T>
void randomize(nn::TensorT<T>& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
    for (size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(lo, hi));
}

// Brute-force GAE: advantages as explicit nested discounted sums of TD errors
// within each done-delimited segment.
inline void gae_brute_force(const std::vector<double>& rewards, const std::vector<double>& values,
                            const std::vector<uint8_t>& dones, double bootstrap, double gamma,
                            double lam, std::vector<double>& adv, std::vector<double>& ret) {
    const size_t n = rewards.size();
    std::vector<double> delta(n);
    for (size_t t = 0; t < n; ++t) {
        const double v_next = dones[t] ? 0.0 : (t + 1 < n ? values[t + 1] : bootstrap);
        delta[t] = rewards[t] + gamma * v_next - values[t];
    }
    adv.assign(n, 0.0);
    for (size_t t = 0; t < n; ++t) {
        double w = 1.0;
        for (size_t k = t; k < n; ++k) {
            adv[t] += w * delta[k];
            if (dones[k]) break;
            w *= gamma * lam;
        }
    }
    ret.assign(n, 0.0);
    for (size_t t = 0; t < n; ++t) ret[t] = adv[t] + values[t];
}

// Direct truncated-Gaussian convolution with edge renormalization.
inline std::vector<double> gaussian_smooth_direct(const std::vector<double>& xs, int window) {
    const int half = window / 2;
    const double sigma = window / 6.0;
    std::vector<double> out(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        double num = 0.0, den = 0.0;
        for (int j = -half; j <= half; ++j) {
            const auto k = static_cast<long>(i) + j;
            if (k < 0 || k >= static_cast<long>(xs.size())) continue;
            const double w = std::exp(-0.5 * (j / sigma) * (j / sigma));
            num += w * xs[static_cast<size_t>(k)];
            den += w;
        }
        out[i] = num / den;
    }
    return out;
}

} // namespace forager::testing
