#pragma once

#include <cstdint>
#include <vector>

#include "util/errors.hpp"

namespace forager::trainer {

// Generalized advantage estimation over one reward stream:
//   delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t
//   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
//   returns = A + V
// `bootstrap` stands in for V_{T} past the end of the stream.
inline void gae(const std::vector<double>& rewards, const std::vector<double>& values,
                const std::vector<uint8_t>& dones, double bootstrap, double gamma, double lam,
                std::vector<double>& advantages, std::vector<double>& returns) {
    const size_t n = rewards.size();
    if (values.size() != n || dones.size() != n)
        throw usage_error("gae: rewards/values/dones must have equal lengths");
    advantages.assign(n, 0.0);
    returns.assign(n, 0.0);
    double running = 0.0;
    for (size_t i = n; i-- > 0;) {
        const double mask = dones[i] ? 0.0 : 1.0;
        const double v_next = i + 1 < n ? values[i + 1] : bootstrap;
        const double delta = rewards[i] + gamma * v_next * mask - values[i];
        running = delta + gamma * lam * mask * running;
        advantages[i] = running;
        returns[i] = running + values[i];
    }
}

} // namespace forager::trainer
