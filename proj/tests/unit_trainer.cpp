#include <doctest.h>

#include <cmath>
#include <limits>
#include <filesystem>
#include <fstream>

#include "support/oracles.hpp"
#include "trainer/gae.hpp"
#include "trainer/trainer.hpp"

using namespace forager;
using namespace forager::trainer;

namespace {

namespace fs = std::filesystem;

agent::ArchSpec tiny_arch(agent::Brain b = agent::Brain::ff) {
    agent::ArchSpec a;
    a.brain = b;
    a.n_bc = 1;
    a.n_lgn = 2;
    a.n_fc = 4;
    a.width = 36;
    a.height = 36;
    return a;
}

PPOHyper tiny_hyper() {
    PPOHyper h;
    h.workers = 2;
    h.rollout_len = 8;
    h.bptt_len = 4;
    h.minibatches = 2;
    h.epochs = 1;
    return h;
}

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "forager_trainer_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("gae: telescoping, one-step, and brute-force oracle") {
    SUBCASE("gamma=1 lambda=1 single episode telescopes to reward-to-go minus V") {
        const std::vector<double> r = {1, 2, 3, 4};
        const std::vector<double> v = {0.5, -0.25, 1.0, 2.0};
        const std::vector<uint8_t> d = {0, 0, 0, 1};
        std::vector<double> adv, ret;
        gae(r, v, d, 99.0 /* ignored after done */, 1.0, 1.0, adv, ret);
        for (size_t t = 0; t < r.size(); ++t) {
            double togo = 0;
            for (size_t s = t; s < r.size(); ++s) togo += r[s];
            CHECK(adv[t] == doctest::Approx(togo - v[t]).epsilon(1e-12));
            CHECK(ret[t] == doctest::Approx(togo).epsilon(1e-12));
        }
    }

    SUBCASE("lambda=0 gives exactly the one-step TD error") {
        const std::vector<double> r = {1, -1, 0.5};
        const std::vector<double> v = {0.2, 0.4, -0.6};
        const std::vector<uint8_t> d = {0, 0, 0};
        std::vector<double> adv, ret;
        gae(r, v, d, 2.0, 0.9, 0.0, adv, ret);
        CHECK(adv[0] == doctest::Approx(r[0] + 0.9 * v[1] - v[0]));
        CHECK(adv[1] == doctest::Approx(r[1] + 0.9 * v[2] - v[1]));
        CHECK(adv[2] == doctest::Approx(r[2] + 0.9 * 2.0 - v[2]));
    }

    SUBCASE("100 random episode streams match the brute-force oracle to 1e-10") {
        Rng rng(13);
        for (int rep = 0; rep < 100; ++rep) {
            const size_t n = 1 + rng.uniform_int(20);
            std::vector<double> r(n), v(n);
            std::vector<uint8_t> d(n, 0);
            for (size_t i = 0; i < n; ++i) {
                r[i] = rng.uniform(-2, 2);
                v[i] = rng.uniform(-2, 2);
                d[i] = rng.uniform01() < 0.15 ? 1 : 0;
            }
            const double bootstrap = rng.uniform(-2, 2);
            const double gamma = rng.uniform(0.8, 1.0), lam = rng.uniform(0.0, 1.0);
            std::vector<double> adv, ret, adv_o, ret_o;
            gae(r, v, d, bootstrap, gamma, lam, adv, ret);
            forager::testing::gae_brute_force(r, v, d, bootstrap, gamma, lam, adv_o, ret_o);
            for (size_t i = 0; i < n; ++i) {
                CHECK(std::abs(adv[i] - adv_o[i]) < 1e-10);
                CHECK(std::abs(ret[i] - ret_o[i]) < 1e-10);
            }
        }
    }
}

TEST_CASE("ppo surrogate arithmetic") {
    // rho=1.5, eps=0.2, A>0: clipped branch wins at 1.2*A
    CHECK(ppo_policy_term(1.5, 2.0, 0.2) == doctest::Approx(1.2 * 2.0));
    // gradient dies when the clip saturates
    CHECK(ppo_policy_term_dlogp(1.5, 2.0, 0.2) == 0.0);
    // rho=1: no clipping, term = A, gradient = A
    CHECK(ppo_policy_term(1.0, -0.7, 0.2) == doctest::Approx(-0.7));
    CHECK(ppo_policy_term_dlogp(1.0, -0.7, 0.2) == doctest::Approx(-0.7));
    // negative advantage, rho below the band: clip takes over
    CHECK(ppo_policy_term(0.5, -1.0, 0.2) == doctest::Approx(0.8 * -1.0));
    CHECK(ppo_policy_term_dlogp(0.5, -1.0, 0.2) == 0.0);
}

TEST_CASE("collect: single record, determinism, and replay oracle") {
    const auto arch = tiny_arch();
    world::TaskSpec task = world::TaskSpec::defaults();
    const auto textures = std::make_shared<raster::TextureSource>(raster::TextureSource::apples(16));
    const auto params = agent::NetParams<float>::build(arch, 5);

    SUBCASE("W=1, T=1 fills exactly one record") {
        PPOHyper h = tiny_hyper();
        h.workers = 1;
        h.rollout_len = 1;
        h.bptt_len = 1;
        h.minibatches = 1;
        std::vector<EnvWorker> ws{EnvWorker::fresh(task, arch, 7, 0)};
        RolloutBuffer buf;
        const CollectResult res = collect(ws, params, task, *textures, h, buf, 0);
        CHECK(buf.workers == 1);
        CHECK(buf.steps == 1);
        CHECK(res.frames == 4);
        CHECK(buf.satiety[0] == 50.0f);
    }

    SUBCASE("identical worker seeds give identical streams; threads do not matter") {
        const PPOHyper h = tiny_hyper();
        auto mk = [&] {
            std::vector<EnvWorker> ws;
            for (int w = 0; w < h.workers; ++w) ws.push_back(EnvWorker::fresh(task, arch, 11, w));
            return ws;
        };
        auto ws1 = mk(), ws2 = mk();
        RolloutBuffer b1, b2;
        collect(ws1, params, task, *textures, h, b1, 0, 1);
        collect(ws2, params, task, *textures, h, b2, 0, 2);
        CHECK(b1.obs == b2.obs);
        CHECK(b1.reward == b2.reward);
        CHECK(b1.logp == b2.logp);
        CHECK(b1.bootstrap == b2.bootstrap);

        // same seed for both workers => identical per-worker streams
        std::vector<EnvWorker> same{EnvWorker::fresh(task, arch, 3, 0),
                                    EnvWorker::fresh(task, arch, 3, 0)};
        RolloutBuffer b3;
        collect(same, params, task, *textures, h, b3, 0, 1);
        for (int t = 0; t < b3.steps; ++t)
            CHECK(b3.reward[b3.at(0, t)] == b3.reward[b3.at(1, t)]);
    }

    SUBCASE("replaying recorded actions through the env reproduces the rewards") {
        PPOHyper h = tiny_hyper();
        h.workers = 1;
        h.rollout_len = 64;
        h.bptt_len = 8;
        h.minibatches = 4;
        std::vector<EnvWorker> ws{EnvWorker::fresh(task, arch, 21, 0)};
        RolloutBuffer buf;
        collect(ws, params, task, *textures, h, buf, 0);

        // independent replay from the same derived seeds
        EnvWorker replay = EnvWorker::fresh(task, arch, 21, 0);
        for (int t = 0; t < h.rollout_len; ++t) {
            const size_t i = buf.at(0, t);
            CHECK(static_cast<float>(replay.env.satiety) == buf.satiety[i]);
            const world::AgentAction a{static_cast<world::Heading>(buf.act_h[i]),
                                       static_cast<world::Velocity>(buf.act_v[i])};
            const world::StepOutcome out = world::step_env(replay.env, a, task, h.action_repeat);
            CHECK(static_cast<float>(out.reward) * h.reward_scale ==
                  doctest::Approx(buf.reward[i]).epsilon(1e-6));
            if (out.done()) replay.reset_episode(task);
        }
    }
}

TEST_CASE("ppo_update: zero learning rate leaves parameters, stats still flow") {
    const auto arch = tiny_arch();
    world::TaskSpec task = world::TaskSpec::defaults();
    const auto textures = std::make_shared<raster::TextureSource>(raster::TextureSource::apples(16));
    auto params = agent::NetParams<float>::build(arch, 5);
    const auto before = agent::NetParams<float>::build(arch, 5);

    PPOHyper h = tiny_hyper();
    h.lr = 0.0f;
    std::vector<EnvWorker> ws;
    for (int w = 0; w < h.workers; ++w) ws.push_back(EnvWorker::fresh(task, arch, 2, w));
    RolloutBuffer buf;
    collect(ws, params, task, *textures, h, buf, 0);
    compute_gae(buf, h);

    auto optim = agent::OptimState::sized(arch);
    Rng rng(1);
    const PPOStats stats = ppo_update(params, optim, buf, h, rng);

    auto an = params.named();
    auto bn = before.named();
    for (size_t i = 0; i < an.size(); ++i) CHECK(*an[i].second == *bn[i].second);

    CHECK(stats.clip_fraction >= 0.0);
    CHECK(stats.clip_fraction <= 1.0);
    CHECK(stats.entropy > 0.0);
    CHECK(stats.entropy <= 2.0 * std::log(3.0) + 1e-6);
    CHECK(std::isfinite(stats.policy_loss));
    CHECK(std::isfinite(stats.value_loss));
}

TEST_CASE("closed loop: entropy bonus alone drives the policy toward uniform") {
    const auto arch = tiny_arch();
    auto params = agent::NetParams<float>::build(arch, 1234);
    // skew the policy first so there is something to undo
    params.actor_h_b[0] = 2.0f;
    params.actor_v_b[2] = -3.0f;

    PPOHyper h;
    h.workers = 1;
    h.rollout_len = 16;
    h.bptt_len = 16;
    h.minibatches = 1;
    h.epochs = 1;
    h.entropy_coef = 0.3f;
    h.value_coef = 0.0f;
    h.lr = 5e-3f;

    auto optim = agent::OptimState::sized(arch);
    Rng update_rng(9);
    Rng act_rng(10);

    RolloutBuffer buf;
    buf.resize(h.workers, h.rollout_len, 3 * arch.width * arch.height, arch.resolved_n_fc(),
               h.bptt_len);
    const nn::Tensor obs({3, arch.height, arch.width}); // black frame
    const nn::Tensor latent({arch.resolved_n_fc()});

    double entropy_last = 0;
    for (int iter = 0; iter < 150; ++iter) {
        for (int t = 0; t < h.rollout_len; ++t) {
            const auto r = agent::act(params, latent, obs, 50.0f, act_rng);
            const size_t i = buf.at(0, t);
            buf.act_h[i] = static_cast<uint8_t>(r.action.heading);
            buf.act_v[i] = static_cast<uint8_t>(r.action.velocity);
            buf.logp[i] = r.logp_h + r.logp_v;
            buf.value[i] = r.value;
            buf.done[i] = 1;
            buf.advantage[i] = 0.0f;     // silence the policy-gradient term
            buf.ret[i] = r.value;        // and the value loss
        }
        const PPOStats stats = ppo_update(params, optim, buf, h, update_rng);
        entropy_last = stats.entropy;
    }
    CHECK(entropy_last > 2.0 * std::log(3.0) - 0.02); // both heads near log 3
}

TEST_CASE("deterministic resume: a crashed run resumes to the uninterrupted result") {
    const auto arch = tiny_arch();
    world::TaskSpec task = world::TaskSpec::defaults();

    TrainSetup base;
    base.task = task;
    base.textures = std::make_shared<raster::TextureSource>(raster::TextureSource::apples(16));
    base.arch = arch;
    base.hyper = tiny_hyper();
    base.hyper.workers = 1;
    base.hyper.rollout_len = 8;
    base.hyper.bptt_len = 4;
    base.hyper.minibatches = 2;
    base.seed = 77;
    base.collector_threads = 1;

    const int64_t one_rollout = 8 * 4; // frames per rollout
    base.frame_budget = 3 * one_rollout;
    base.checkpoint_every = one_rollout; // checkpoint after every update

    // uninterrupted run
    TrainSetup full = base;
    full.run_dir = fresh_dir("full").string();
    const TrainResult full_res = train(full);

    // crash after the first rollout (past its checkpoint), then resume
    struct Crash {};
    TrainSetup crashed = base;
    crashed.run_dir = fresh_dir("crashed").string();
    int calls = 0;
    crashed.progress = [&](int64_t, double) {
        if (++calls == 2) throw Crash{};
    };
    CHECK_THROWS_AS((void)train(crashed), Crash);

    TrainSetup cont = base;
    cont.run_dir = crashed.run_dir;
    cont.resume = true;
    const TrainResult cont_res = train(cont);

    CHECK(full_res.frames == cont_res.frames);
    CHECK(full_res.updates == cont_res.updates);

    const auto a = agent::Checkpoint::load(full_res.final_checkpoint);
    const auto b = agent::Checkpoint::load(cont_res.final_checkpoint);
    auto an = a.params.named();
    auto bn = b.params.named();
    for (size_t i = 0; i < an.size(); ++i) CHECK(*an[i].second == *bn[i].second);
    CHECK(a.optim.t == b.optim.t);

    CHECK(read_file(full.run_dir + "/history.csv") == read_file(cont.run_dir + "/history.csv"));
}

TEST_CASE("training histories are bit-identical across runs in deterministic mode") {
    const auto arch = tiny_arch();
    TrainSetup s;
    s.task = world::TaskSpec::defaults();
    s.textures = std::make_shared<raster::TextureSource>(raster::TextureSource::apples(16));
    s.arch = arch;
    s.hyper = tiny_hyper();
    s.hyper.workers = 1;
    s.hyper.rollout_len = 8;
    s.hyper.bptt_len = 4;
    s.hyper.minibatches = 2;
    s.seed = 31;
    s.frame_budget = 3 * 8 * 4;
    s.checkpoint_every = 0;

    s.run_dir = fresh_dir("det_a").string();
    train(s);
    const std::string hist_a = read_file(s.run_dir + "/history.csv");
    const std::string stats_a = read_file(s.run_dir + "/stats.csv");

    s.run_dir = fresh_dir("det_b").string();
    train(s);
    CHECK(read_file(s.run_dir + "/history.csv") == hist_a);
    CHECK(read_file(s.run_dir + "/stats.csv") == stats_a);
}

TEST_CASE("train with zero budget returns the initialized checkpoint and no history") {
    TrainSetup s;
    s.task = world::TaskSpec::defaults();
    s.textures = std::make_shared<raster::TextureSource>(raster::TextureSource::apples(16));
    s.arch = tiny_arch();
    s.hyper = tiny_hyper();
    s.seed = 4;
    s.frame_budget = 0;
    s.run_dir = fresh_dir("zero").string();
    const TrainResult r = train(s);
    CHECK(r.frames == 0);
    CHECK(r.updates == 0);
    CHECK(fs::exists(r.final_checkpoint));
    CHECK(!fs::exists(s.run_dir + "/history.csv"));
    const auto c = agent::Checkpoint::load(r.final_checkpoint);
    const auto fresh = agent::NetParams<float>::build(s.arch, s.seed);
    auto an = c.params.named();
    auto fn = fresh.named();
    for (size_t i = 0; i < an.size(); ++i) CHECK(*an[i].second == *fn[i].second);
}

TEST_CASE("advantage normalization: per-batch mean 0 and std 1 within 1e-6") {
    Rng rng(606);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> adv(256);
        for (auto& a : adv) a = rng.uniform(-3, 7) * rng.uniform(0.1, 50);
        const auto [mean, inv_std] = advantage_mean_inv_std(adv);
        double m2 = 0, v2 = 0;
        for (double a : adv) m2 += (a - mean) * inv_std;
        m2 /= static_cast<double>(adv.size());
        for (double a : adv) {
            const double z = (a - mean) * inv_std;
            v2 += (z - m2) * (z - m2);
        }
        v2 /= static_cast<double>(adv.size());
        CHECK(std::abs(m2) < 1e-6);
        CHECK(std::abs(std::sqrt(v2) - 1.0) < 1e-6);
    }
}

TEST_CASE("collect surfaces worker faults with the worker id") {
    const auto arch = tiny_arch();
    world::TaskSpec task = world::TaskSpec::defaults();
    const auto textures = std::make_shared<raster::TextureSource>(raster::TextureSource::apples(16));
    auto params = agent::NetParams<float>::build(arch, 5);
    params.critic_w[0] = std::numeric_limits<float>::quiet_NaN();
    PPOHyper h = tiny_hyper();
    std::vector<EnvWorker> ws;
    for (int w = 0; w < h.workers; ++w) ws.push_back(EnvWorker::fresh(task, arch, 2, w));
    RolloutBuffer buf;
    CHECK_THROWS_WITH_AS(collect(ws, params, task, *textures, h, buf, 0),
                         doctest::Contains("worker 0"), training_error);
}
