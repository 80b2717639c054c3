#pragma once

#include "agent/checkpoint.hpp"
#include "agent/net.hpp"
#include "trainer/rollout.hpp"

namespace forager::trainer {

struct PPOStats {
    double policy_loss = 0;
    double value_loss = 0;
    double entropy = 0;       // mean of (heading + velocity) entropy
    double clip_fraction = 0;
    double grad_norm = 0;     // pre-clip, mean over minibatches
    double approx_kl = 0;
};

// Per-minibatch advantage normalization: subtract the mean, divide by the
// standard deviation (epsilon-guarded).
inline std::pair<double, double> advantage_mean_inv_std(const std::vector<double>& xs) {
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    return {mean, 1.0 / (std::sqrt(var) + 1e-8)};
}

// The clipped surrogate contribution of one sample:
//   min(ratio * adv, clip(ratio, 1-eps, 1+eps) * adv)
// and its derivative w.r.t. the new log-probability.
inline double ppo_policy_term(double ratio, double adv, double eps) {
    const double clipped = std::min(std::max(ratio, 1.0 - eps), 1.0 + eps);
    return std::min(ratio * adv, clipped * adv);
}

inline double ppo_policy_term_dlogp(double ratio, double adv, double eps) {
    const double clipped = std::min(std::max(ratio, 1.0 - eps), 1.0 + eps);
    return ratio * adv <= clipped * adv ? ratio * adv : 0.0;
}

// Clipped-PPO epochs over the rollout, minibatched by BPTT sequence, with
// per-minibatch advantage normalization, entropy bonus, value MSE, global
// gradient-norm clipping, and Adam. Mutates `params` and `optim` in place.
PPOStats ppo_update(agent::NetParams<float>& params, agent::OptimState& optim,
                    const RolloutBuffer& buffer, const PPOHyper& hyper, Rng& update_rng);

// Fills buffer.advantage / buffer.ret from rewards, values, dones, bootstrap.
void compute_gae(RolloutBuffer& buffer, const PPOHyper& hyper);

} // namespace forager::trainer
