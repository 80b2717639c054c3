#include "trainer/rollout.hpp"

#include <atomic>
#include <cstring>
#include <sstream>
#include <thread>

namespace forager::trainer {

namespace {

void float_to_hex(std::ostream& os, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    char buf[9];
    snprintf(buf, sizeof buf, "%08x", bits);
    os << buf;
}

float hex_to_float(const std::string& s) {
    const auto bits = static_cast<uint32_t>(std::stoul(s, nullptr, 16));
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

} // namespace

std::string EnvWorker::serialize() const {
    std::ostringstream os;
    os << "worker1\n";
    os << act_rng.save_state() << '\n';
    os << reseed_rng.save_state() << '\n';
    os << latent.size();
    for (size_t i = 0; i < latent.size(); ++i) {
        os << ' ';
        float_to_hex(os, latent[i]);
    }
    os << '\n';
    os << env.serialize();
    return os.str();
}

EnvWorker EnvWorker::deserialize(const std::string& blob, int n_fc) {
    std::istringstream is(blob);
    std::string tag;
    std::getline(is, tag);
    if (tag != "worker1") throw format_error("worker state: bad tag");
    EnvWorker w;
    std::string line;
    std::getline(is, line);
    w.act_rng.load_state(line);
    std::getline(is, line);
    w.reseed_rng.load_state(line);
    size_t n = 0;
    is >> n;
    if (static_cast<int>(n) != n_fc) throw format_error("worker state: latent width mismatch");
    w.latent = nn::Tensor({n_fc});
    for (size_t i = 0; i < n; ++i) {
        std::string hex;
        is >> hex;
        w.latent[i] = hex_to_float(hex);
    }
    std::getline(is, line); // eol
    std::ostringstream rest;
    rest << is.rdbuf();
    w.env = world::WorldState::deserialize(rest.str());
    return w;
}

namespace {

// Runs one worker for the whole rollout; writes only its own buffer rows.
void run_worker(int w, std::vector<EnvWorker>& workers, const agent::NetParams<float>& params,
                const world::TaskSpec& task, const raster::TextureSource& textures,
                const PPOHyper& hyper, RolloutBuffer& buffer, int64_t& frames_out,
                std::vector<EpisodeEnd>& episodes_out) {
    EnvWorker& worker = workers[static_cast<size_t>(w)];
    const agent::ArchSpec& arch = params.spec;
    int64_t frames = 0;
    for (int t = 0; t < hyper.rollout_len; ++t) {
        if (t % hyper.bptt_len == 0)
            std::memcpy(buffer.seq_latent_ptr(w, t / hyper.bptt_len), worker.latent.data(),
                        static_cast<size_t>(buffer.n_fc) * sizeof(float));

        const raster::Image view =
            raster::render(worker.env, task, textures, arch.width, arch.height);
        const nn::Tensor obs = agent::obs_from_image<float>(view);
        std::memcpy(buffer.obs_ptr(w, t), obs.data(),
                    static_cast<size_t>(buffer.obs_size) * sizeof(float));
        const auto satiety = static_cast<float>(worker.env.satiety);
        buffer.satiety[buffer.at(w, t)] = satiety;

        const agent::ActResult<float> act =
            agent::act(params, worker.latent, obs, satiety, worker.act_rng);
        worker.latent = act.next_latent;

        const world::StepOutcome out =
            world::step_env(worker.env, act.action, task, hyper.action_repeat);
        frames += out.frames_advanced;

        const size_t i = buffer.at(w, t);
        buffer.act_h[i] = static_cast<uint8_t>(act.action.heading);
        buffer.act_v[i] = static_cast<uint8_t>(act.action.velocity);
        buffer.reward[i] = static_cast<float>(out.reward) * hyper.reward_scale;
        buffer.value[i] = act.value;
        buffer.logp[i] = act.logp_h + act.logp_v;
        buffer.done[i] = out.done() ? 1 : 0;

        if (out.done()) {
            episodes_out.push_back({0 /* patched during merge */, worker.env.frame});
            worker.reset_episode(task);
        }
    }

    // bootstrap value for the state after the last step
    {
        const raster::Image view =
            raster::render(worker.env, task, textures, arch.width, arch.height);
        const nn::Tensor obs = agent::obs_from_image<float>(view);
        agent::Trace<float> trace;
        agent::forward(params, obs, static_cast<float>(worker.env.satiety), worker.latent, trace);
        buffer.bootstrap[static_cast<size_t>(w)] = trace.value;
    }
    frames_out = frames;
}

} // namespace

CollectResult collect(std::vector<EnvWorker>& workers, const agent::NetParams<float>& params,
                      const world::TaskSpec& task, const raster::TextureSource& textures,
                      const PPOHyper& hyper, RolloutBuffer& buffer, int64_t frames_before,
                      int threads) {
    hyper.validate();
    const int w_n = static_cast<int>(workers.size());
    if (w_n != hyper.workers) throw usage_error("collect: worker count mismatch");
    const agent::ArchSpec& arch = params.spec;
    buffer.resize(w_n, hyper.rollout_len, 3 * arch.width * arch.height, arch.resolved_n_fc(),
                  hyper.bptt_len);

    std::vector<int64_t> frames(static_cast<size_t>(w_n), 0);
    std::vector<std::vector<EpisodeEnd>> episodes(static_cast<size_t>(w_n));
    std::vector<std::string> errors(static_cast<size_t>(w_n));

    auto guarded_worker = [&](int w) {
        try {
            run_worker(w, workers, params, task, textures, hyper, buffer,
                       frames[static_cast<size_t>(w)], episodes[static_cast<size_t>(w)]);
        } catch (const std::exception& e) {
            errors[static_cast<size_t>(w)] = e.what();
        }
    };

    if (threads <= 1 || w_n == 1) {
        for (int w = 0; w < w_n; ++w) guarded_worker(w);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        const int tn = std::min(threads, w_n);
        pool.reserve(static_cast<size_t>(tn));
        for (int k = 0; k < tn; ++k)
            pool.emplace_back([&] {
                for (int w = next.fetch_add(1); w < w_n; w = next.fetch_add(1)) guarded_worker(w);
            });
        for (auto& th : pool) th.join();
    }
    for (int w = 0; w < w_n; ++w)
        if (!errors[static_cast<size_t>(w)].empty())
            throw training_error("worker " + std::to_string(w) + ": " +
                                 errors[static_cast<size_t>(w)]);

    CollectResult r;
    for (int w = 0; w < w_n; ++w) r.frames += frames[static_cast<size_t>(w)];
    // deterministic merge: worker-major order; completions are stamped with
    // the frame total at the end of this rollout
    for (int w = 0; w < w_n; ++w)
        for (auto e : episodes[static_cast<size_t>(w)]) {
            e.frames_at_end = frames_before + r.frames;
            r.episodes.push_back(e);
        }
    return r;
}

} // namespace forager::trainer
