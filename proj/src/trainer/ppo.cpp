#include "trainer/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "trainer/gae.hpp"

namespace forager::trainer {

void compute_gae(RolloutBuffer& b, const PPOHyper& hyper) {
    std::vector<double> rewards(static_cast<size_t>(b.steps)), values(rewards.size());
    std::vector<uint8_t> dones(rewards.size());
    std::vector<double> adv, ret;
    for (int w = 0; w < b.workers; ++w) {
        for (int t = 0; t < b.steps; ++t) {
            const size_t i = b.at(w, t);
            rewards[static_cast<size_t>(t)] = b.reward[i];
            values[static_cast<size_t>(t)] = b.value[i];
            dones[static_cast<size_t>(t)] = b.done[i];
        }
        gae(rewards, values, dones, b.bootstrap[static_cast<size_t>(w)],
            static_cast<double>(hyper.gamma), static_cast<double>(hyper.lam), adv, ret);
        for (int t = 0; t < b.steps; ++t) {
            const size_t i = b.at(w, t);
            b.advantage[i] = static_cast<float>(adv[static_cast<size_t>(t)]);
            b.ret[i] = static_cast<float>(ret[static_cast<size_t>(t)]);
        }
    }
}

namespace {

struct SeqRef {
    int worker;
    int seq; // sequence index within the worker stream
};

} // namespace

PPOStats ppo_update(agent::NetParams<float>& params, agent::OptimState& optim,
                    const RolloutBuffer& b, const PPOHyper& hyper, Rng& update_rng) {
    hyper.validate();
    const agent::ArchSpec& arch = params.spec;
    const bool recurrent = agent::brain_recurrent(arch.brain);
    const int nfc = arch.resolved_n_fc();
    const int seq_per_worker = b.steps / b.bptt_len;
    const int n_seq = b.workers * seq_per_worker;
    const int seq_per_mb = n_seq / hyper.minibatches;

    std::vector<SeqRef> order(static_cast<size_t>(n_seq));
    for (int i = 0; i < n_seq; ++i)
        order[static_cast<size_t>(i)] = {i / seq_per_worker, i % seq_per_worker};

    auto grads = agent::NetParams<float>::zeros_like(arch);
    nn::AdamHyper adam;
    adam.lr = hyper.lr;

    PPOStats stats;
    int64_t stat_samples = 0;

    std::vector<agent::Trace<float>> traces(static_cast<size_t>(b.bptt_len));
    std::vector<std::array<float, 3>> dlh(traces.size()), dlv(traces.size());
    std::vector<float> dval(traces.size());

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        // Fisher-Yates on the sequence order
        for (int i = n_seq - 1; i > 0; --i) {
            const auto j = static_cast<int>(update_rng.uniform_int(static_cast<uint64_t>(i + 1)));
            std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
        }

        for (int mb = 0; mb < hyper.minibatches; ++mb) {
            const int first = mb * seq_per_mb;
            const int n_steps = seq_per_mb * b.bptt_len;

            // per-minibatch advantage normalization
            std::vector<double> mb_adv;
            mb_adv.reserve(static_cast<size_t>(n_steps));
            for (int s = 0; s < seq_per_mb; ++s) {
                const SeqRef ref = order[static_cast<size_t>(first + s)];
                for (int t = 0; t < b.bptt_len; ++t)
                    mb_adv.push_back(b.advantage[b.at(ref.worker, ref.seq * b.bptt_len + t)]);
            }
            const auto [mean, inv_std] = advantage_mean_inv_std(mb_adv);

            agent::grads_zero(grads);
            double mb_policy = 0, mb_value = 0, mb_entropy = 0, mb_kl = 0;
            int64_t clipped = 0;
            const float inv_n = 1.0f / static_cast<float>(n_steps);

            for (int s = 0; s < seq_per_mb; ++s) {
                const SeqRef ref = order[static_cast<size_t>(first + s)];
                const int t0 = ref.seq * b.bptt_len;

                // forward the sequence from its stored initial latent
                nn::Tensor h({nfc});
                std::memcpy(h.data(), b.seq_latent_ptr(ref.worker, ref.seq),
                            static_cast<size_t>(nfc) * sizeof(float));
                for (int t = 0; t < b.bptt_len; ++t) {
                    const size_t i = b.at(ref.worker, t0 + t);
                    nn::Tensor obs({3, arch.height, arch.width});
                    std::memcpy(obs.data(), b.obs_ptr(ref.worker, t0 + t),
                                static_cast<size_t>(b.obs_size) * sizeof(float));
                    agent::forward(params, obs, b.satiety[i], h,
                                   traces[static_cast<size_t>(t)]);
                    h = traces[static_cast<size_t>(t)].latent;
                    // an episode boundary inside the sequence resets the latent
                    if (recurrent && b.done[i]) h.fill(0.0f);

                    const auto& tr = traces[static_cast<size_t>(t)];
                    const auto head = nn::Categorical<float, 3>::from_logits(tr.logits_h.data());
                    const auto vel = nn::Categorical<float, 3>::from_logits(tr.logits_v.data());
                    const int ah = b.act_h[i], av = b.act_v[i];
                    const double logp_new = head.log_prob(ah) + vel.log_prob(av);
                    const double ratio = std::exp(logp_new - b.logp[i]);
                    const double adv = (b.advantage[i] - mean) * inv_std;

                    mb_policy -= ppo_policy_term(ratio, adv, hyper.clip_eps) * inv_n;
                    const double dlogp =
                        -ppo_policy_term_dlogp(ratio, adv, hyper.clip_eps) * inv_n;
                    if (std::abs(ratio - 1.0) > hyper.clip_eps) ++clipped;
                    mb_kl += (b.logp[i] - logp_new);

                    const double ent = head.entropy() + vel.entropy();
                    mb_entropy += ent;

                    const auto gh = head.dlogp_dlogits(ah);
                    const auto gv = vel.dlogp_dlogits(av);
                    const auto eh = head.dentropy_dlogits();
                    const auto ev = vel.dentropy_dlogits();
                    auto& dh_t = dlh[static_cast<size_t>(t)];
                    auto& dv_t = dlv[static_cast<size_t>(t)];
                    for (int k = 0; k < 3; ++k) {
                        dh_t[static_cast<size_t>(k)] = static_cast<float>(
                            dlogp * gh[static_cast<size_t>(k)] -
                            hyper.entropy_coef * inv_n * eh[static_cast<size_t>(k)]);
                        dv_t[static_cast<size_t>(k)] = static_cast<float>(
                            dlogp * gv[static_cast<size_t>(k)] -
                            hyper.entropy_coef * inv_n * ev[static_cast<size_t>(k)]);
                    }

                    const double verr = static_cast<double>(tr.value) - b.ret[i];
                    mb_value += verr * verr * inv_n;
                    dval[static_cast<size_t>(t)] =
                        static_cast<float>(hyper.value_coef * 2.0 * verr * inv_n);
                }

                // backward through time
                nn::Tensor dh_next({nfc});
                nn::Tensor dh_prev({nfc});
                for (int t = b.bptt_len - 1; t >= 0; --t) {
                    const size_t i = b.at(ref.worker, t0 + t);
                    if (recurrent && b.done[i]) dh_next.fill(0.0f); // no flow across resets
                    dh_prev.fill(0.0f);
                    agent::backward<float>(params, traces[static_cast<size_t>(t)],
                                           dlh[static_cast<size_t>(t)],
                                           dlv[static_cast<size_t>(t)],
                                           dval[static_cast<size_t>(t)],
                                           recurrent ? &dh_next : nullptr, &grads, nullptr,
                                           recurrent ? &dh_prev : nullptr);
                    if (recurrent) dh_next = dh_prev;
                }
            }

            if (!std::isfinite(mb_policy) || !std::isfinite(mb_value))
                throw training_error("ppo_update: non-finite loss (policy=" +
                                     std::to_string(mb_policy) +
                                     ", value=" + std::to_string(mb_value) + ")");

            // global gradient-norm clip, then Adam
            const double norm = std::sqrt(agent::grads_sq_norm(grads));
            if (!std::isfinite(norm)) throw training_error("ppo_update: non-finite gradient norm");
            if (hyper.grad_clip > 0 && norm > hyper.grad_clip)
                agent::grads_scale(grads, static_cast<float>(hyper.grad_clip / norm));
            optim.t += 1;
            auto pn = params.named();
            auto gn = grads.named();
            auto mn = optim.m.named();
            auto vn = optim.v.named();
            for (size_t k = 0; k < pn.size(); ++k)
                nn::adam_step(*pn[k].second, *gn[k].second, *mn[k].second, *vn[k].second, optim.t,
                              adam, pn[k].first);

            stats.policy_loss += mb_policy;
            stats.value_loss += mb_value;
            stats.entropy += mb_entropy / n_steps;
            stats.clip_fraction += static_cast<double>(clipped) / n_steps;
            stats.approx_kl += mb_kl / n_steps;
            stats.grad_norm += norm;
            stat_samples += 1;
        }
    }

    if (stat_samples > 0) {
        stats.policy_loss /= static_cast<double>(stat_samples);
        stats.value_loss /= static_cast<double>(stat_samples);
        stats.entropy /= static_cast<double>(stat_samples);
        stats.clip_fraction /= static_cast<double>(stat_samples);
        stats.approx_kl /= static_cast<double>(stat_samples);
        stats.grad_norm /= static_cast<double>(stat_samples);
    }
    return stats;
}

} // namespace forager::trainer
