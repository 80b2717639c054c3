#pragma once

#include <array>
#include <cmath>

#include "nn/tensor.hpp"
#include "util/errors.hpp"
#include "util/rng.hpp"

namespace forager::nn {

// Categorical distribution over a small fixed action count, parameterized by
// logits. Softmax is max-subtracted for stability; sampling is inverse-CDF on
// the caller's RNG.
template <typename T, int N>
struct Categorical {
    std::array<T, N> probs{};

    static Categorical from_logits(const T* logits) {
        T mx = logits[0];
        for (int i = 1; i < N; ++i) mx = std::max(mx, logits[i]);
        if (!std::isfinite(static_cast<double>(mx)))
            throw training_error("categorical: non-finite logits");
        Categorical c;
        T sum = 0;
        for (int i = 0; i < N; ++i) {
            c.probs[static_cast<size_t>(i)] = std::exp(logits[i] - mx);
            sum += c.probs[static_cast<size_t>(i)];
        }
        for (int i = 0; i < N; ++i) c.probs[static_cast<size_t>(i)] /= sum;
        return c;
    }

    int sample(Rng& rng) const {
        const T u = static_cast<T>(rng.uniform01());
        T acc = 0;
        for (int i = 0; i < N - 1; ++i) {
            acc += probs[static_cast<size_t>(i)];
            if (u < acc) return i;
        }
        return N - 1;
    }

    T log_prob(int a) const { return std::log(probs[static_cast<size_t>(a)]); }

    T entropy() const {
        T h = 0;
        for (int i = 0; i < N; ++i) {
            const T p = probs[static_cast<size_t>(i)];
            if (p > 0) h -= p * std::log(p);
        }
        return h;
    }

    // d log_prob(a) / d logits
    std::array<T, N> dlogp_dlogits(int a) const {
        std::array<T, N> g;
        for (int i = 0; i < N; ++i)
            g[static_cast<size_t>(i)] = (i == a ? T(1) : T(0)) - probs[static_cast<size_t>(i)];
        return g;
    }

    // d entropy / d logits = -p_k (log p_k + H)
    std::array<T, N> dentropy_dlogits() const {
        const T h = entropy();
        std::array<T, N> g;
        for (int i = 0; i < N; ++i) {
            const T p = probs[static_cast<size_t>(i)];
            g[static_cast<size_t>(i)] = p > 0 ? -p * (std::log(p) + h) : T(0);
        }
        return g;
    }
};

} // namespace forager::nn
