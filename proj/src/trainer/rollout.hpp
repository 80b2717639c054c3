#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agent/net.hpp"
#include "nn/tensor.hpp"
#include "raster/render.hpp"
#include "util/errors.hpp"
#include "util/rng.hpp"
#include "world/world.hpp"

namespace forager::trainer {

struct PPOHyper {
    float gamma = 0.995f;
    float lam = 0.95f;
    float clip_eps = 0.2f;
    float lr = 1e-3f;
    bool lr_anneal = true; // linear decay of lr over the frame budget
    float entropy_coef = 0.003f;
    float value_coef = 0.5f;
    int epochs = 2;
    int minibatches = 8;
    int rollout_len = 128;  // agent steps per worker per rollout
    int workers = 16;
    int bptt_len = 32;      // recurrent truncation; sequences carry stored latents
    float grad_clip = 1.0f;
    float reward_scale = 1.0f / 400.0f;
    int action_repeat = 4;

    void validate() const {
        if (!(gamma > 0.0f && gamma <= 1.0f)) throw config_error("ppo: gamma must be in (0,1]");
        if (!(lam >= 0.0f && lam <= 1.0f)) throw config_error("ppo: lambda must be in [0,1]");
        if (clip_eps <= 0.0f) throw config_error("ppo: clip_eps must be > 0");
        if (lr < 0.0f) throw config_error("ppo: lr must be >= 0");
        if (epochs < 1 || minibatches < 1) throw config_error("ppo: epochs/minibatches >= 1");
        if (rollout_len < 1 || workers < 1) throw config_error("ppo: rollout_len/workers >= 1");
        if (bptt_len < 1 || rollout_len % bptt_len != 0)
            throw config_error("ppo: bptt_len must divide rollout_len");
        if ((static_cast<long>(workers) * (rollout_len / bptt_len)) % minibatches != 0)
            throw config_error("ppo: minibatches must divide workers*(rollout_len/bptt_len)");
        if (action_repeat < 1) throw config_error("ppo: action_repeat must be >= 1");
        if (reward_scale <= 0.0f) throw config_error("ppo: reward_scale must be > 0");
    }
};

// Fixed-horizon on-policy storage, W workers by T steps, plus the latent
// snapshot at every BPTT sequence start. Values/log-probs come from the
// snapshot that acted.
struct RolloutBuffer {
    int workers = 0, steps = 0, obs_size = 0, n_fc = 0, bptt_len = 0;
    std::vector<float> obs;        // [w][t][obs_size]
    std::vector<float> satiety;    // raw 0..100 at decision time
    std::vector<uint8_t> act_h, act_v;
    std::vector<float> reward;     // scaled
    std::vector<float> value;      // scaled
    std::vector<float> logp;       // joint log-prob
    std::vector<uint8_t> done;
    std::vector<float> seq_latent; // [w][t/bptt][n_fc]
    std::vector<float> bootstrap;  // [w], scaled
    std::vector<float> advantage, ret;

    void resize(int w, int t, int obs_sz, int nfc, int bptt) {
        workers = w;
        steps = t;
        obs_size = obs_sz;
        n_fc = nfc;
        bptt_len = bptt;
        const size_t n = static_cast<size_t>(w) * t;
        obs.assign(n * static_cast<size_t>(obs_sz), 0.0f);
        satiety.assign(n, 0.0f);
        act_h.assign(n, 0);
        act_v.assign(n, 0);
        reward.assign(n, 0.0f);
        value.assign(n, 0.0f);
        logp.assign(n, 0.0f);
        done.assign(n, 0);
        seq_latent.assign(static_cast<size_t>(w) * (t / bptt) * nfc, 0.0f);
        bootstrap.assign(static_cast<size_t>(w), 0.0f);
        advantage.assign(n, 0.0f);
        ret.assign(n, 0.0f);
    }

    size_t at(int w, int t) const { return static_cast<size_t>(w) * steps + t; }
    float* obs_ptr(int w, int t) { return obs.data() + at(w, t) * obs_size; }
    const float* obs_ptr(int w, int t) const { return obs.data() + at(w, t) * obs_size; }
    float* seq_latent_ptr(int w, int seq) {
        return seq_latent.data() + (static_cast<size_t>(w) * (steps / bptt_len) + seq) * n_fc;
    }
    const float* seq_latent_ptr(int w, int seq) const {
        return seq_latent.data() + (static_cast<size_t>(w) * (steps / bptt_len) + seq) * n_fc;
    }
};

// One collector's private environment, recurrent state, and RNG streams.
struct EnvWorker {
    world::WorldState env;
    nn::Tensor latent;
    Rng act_rng;
    Rng reseed_rng;

    static EnvWorker fresh(const world::TaskSpec& task, const agent::ArchSpec& arch,
                           uint64_t base_seed, int index) {
        EnvWorker w;
        w.act_rng = Rng(derive_seed(base_seed, 0xac7ULL, static_cast<uint64_t>(index)));
        w.reseed_rng = Rng(derive_seed(base_seed, 0x5eedULL, static_cast<uint64_t>(index)));
        w.env = world::init_world(task, w.reseed_rng.next_u64());
        w.latent = nn::Tensor({arch.resolved_n_fc()});
        return w;
    }

    void reset_episode(const world::TaskSpec& task) {
        env = world::init_world(task, reseed_rng.next_u64());
        latent.fill(0.0f);
    }

    std::string serialize() const;
    static EnvWorker deserialize(const std::string& blob, int n_fc);
};

struct EpisodeEnd {
    int64_t frames_at_end = 0; // global env-frame counter when the episode finished
    int64_t lifespan = 0;      // frames survived
};

struct CollectResult {
    int64_t frames = 0;                 // env frames advanced this rollout
    std::vector<EpisodeEnd> episodes;   // merge order: worker-major, then step
};

// Advances every worker `steps` agent-decisions under one immutable parameter
// snapshot. Worker streams are independent, so the result does not depend on
// the thread count.
CollectResult collect(std::vector<EnvWorker>& workers, const agent::NetParams<float>& params,
                      const world::TaskSpec& task, const raster::TextureSource& textures,
                      const PPOHyper& hyper, RolloutBuffer& buffer, int64_t frames_before,
                      int threads = 1);

} // namespace forager::trainer
