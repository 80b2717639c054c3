#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "agent/checkpoint.hpp"
#include "agent/net.hpp"
#include "support/oracles.hpp"

using namespace forager;
using namespace forager::agent;
using nn::TensorT;

namespace {

ArchSpec tiny(Brain b, int w = 36, int h = 36) {
    ArchSpec s;
    s.brain = b;
    s.n_bc = 2;
    s.n_lgn = 3;
    s.n_fc = 5;
    s.width = w;
    s.height = h;
    return s;
}

template <typename T>
TensorT<T> random_obs(const ArchSpec& spec, Rng& rng) {
    TensorT<T> obs({3, spec.height, spec.width});
    for (size_t i = 0; i < obs.size(); ++i) obs[i] = static_cast<T>(rng.uniform01());
    return obs;
}

// Independent parameter-count formula, written from the layer shapes alone.
size_t expected_param_count(const ArchSpec& s) {
    const int nfc = s.resolved_n_fc();
    const auto ch = s.chain();
    size_t n = 0;
    n += static_cast<size_t>(s.n_bc) * 3 * 3 * 3 + s.n_bc;              // bp
    n += static_cast<size_t>(2 * s.n_bc) * s.n_bc * 3 * 3 + 2 * s.n_bc; // rgc
    n += static_cast<size_t>(s.n_lgn) * 2 * s.n_bc * 1 * 1 + s.n_lgn;   // lgn
    n += static_cast<size_t>(4 * s.n_bc) * s.n_lgn * 4 * 4 + 4 * s.n_bc; // v1
    n += static_cast<size_t>(nfc) * ch.flat + nfc;                       // fc1
    n += static_cast<size_t>(nfc) * (nfc + (brain_input_satiety(s.brain) ? 1 : 0)) + nfc; // fc2
    n += static_cast<size_t>(nfc) * nfc + nfc;                           // fc3
    if (brain_recurrent(s.brain))
        n += 3 * (static_cast<size_t>(nfc) * nfc * 2 + nfc);             // gru
    else
        n += static_cast<size_t>(nfc) * nfc + nfc;                       // head
    n += 2 * (static_cast<size_t>(3) * nfc + 3);                         // actors
    n += static_cast<size_t>(nfc) + 1;                                   // critic
    return n;
}

} // namespace

TEST_CASE("spatial chain matches the floor arithmetic of the pooling stages") {
    ArchSpec s;
    s.n_bc = 16;
    s.n_lgn = 32;
    s.width = 160;
    s.height = 120;
    const auto ch = s.chain();
    CHECK(ch.bp_w == 53);
    CHECK(ch.bp_h == 40);
    CHECK(ch.rgc_w == 17);
    CHECK(ch.rgc_h == 13);
    CHECK(ch.v1_w == 4);
    CHECK(ch.v1_h == 3);
    CHECK(ch.flat == 64 * 4 * 3); // 768

    ArchSpec d; // desk default
    d.n_bc = 4;
    d.width = 64;
    d.height = 48;
    const auto dch = d.chain();
    CHECK(dch.bp_w == 21);
    CHECK(dch.bp_h == 16);
    CHECK(dch.rgc_w == 7);
    CHECK(dch.rgc_h == 5);
    CHECK(dch.v1_w == 1);
    CHECK(dch.v1_h == 1);
    CHECK(dch.flat == 16);

    ArchSpec bad = tiny(Brain::ff, 20, 20); // too small for three pools
    CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("n_fc defaults: 32 feedforward, 128 recurrent") {
    ArchSpec s;
    s.brain = Brain::ff;
    CHECK(s.resolved_n_fc() == 32);
    s.brain = Brain::ff_is;
    CHECK(s.resolved_n_fc() == 32);
    s.brain = Brain::rnn;
    CHECK(s.resolved_n_fc() == 128);
    s.brain = Brain::rnn_is;
    CHECK(s.resolved_n_fc() == 128);
    s.n_fc = 64;
    CHECK(s.resolved_n_fc() == 64);
}

TEST_CASE("parameter counts are deterministic functions of the arch spec") {
    for (Brain b : {Brain::linear, Brain::ff, Brain::ff_is, Brain::rnn, Brain::rnn_is}) {
        const ArchSpec s = tiny(b);
        const auto p = NetParams<float>::build(s, 1);
        CHECK(p.param_count() == expected_param_count(s));
    }
    // paper-default RNN at full resolution
    ArchSpec full;
    full.brain = Brain::rnn;
    full.n_bc = 16;
    full.n_lgn = 32;
    full.width = 160;
    full.height = 120;
    const auto p = NetParams<float>::build(full, 1);
    CHECK(p.param_count() == expected_param_count(full));
}

TEST_CASE("same seed builds identical parameters; biases start at zero") {
    const ArchSpec s = tiny(Brain::rnn_is);
    const auto a = NetParams<float>::build(s, 99);
    const auto b = NetParams<float>::build(s, 99);
    const auto c = NetParams<float>::build(s, 100);
    auto an = a.named(), bn = b.named(), cn = c.named();
    bool any_diff = false;
    for (size_t i = 0; i < an.size(); ++i) {
        CHECK(*an[i].second == *bn[i].second);
        if (!(*an[i].second == *cn[i].second)) any_diff = true;
    }
    CHECK(any_diff);
    for (float v : a.bp_b.data() == nullptr ? std::vector<float>{} : std::vector<float>(a.bp_b.data(), a.bp_b.data() + a.bp_b.size()))
        CHECK(v == 0.0f);
    CHECK(a.fc1_b[0] == 0.0f);
    CHECK(a.critic_b[0] == 0.0f);
}

TEST_CASE("IS variants differ from non-IS twins by one fc2 input column") {
    const ArchSpec ff = tiny(Brain::ff);
    const ArchSpec ffis = tiny(Brain::ff_is);
    const auto a = NetParams<float>::build(ff, 5);
    const auto b = NetParams<float>::build(ffis, 5);
    CHECK(a.fc2_w.shape() == std::vector<int>{5, 5});
    CHECK(b.fc2_w.shape() == std::vector<int>{5, 6});
    CHECK(b.param_count() == a.param_count() + 5);
}

TEST_CASE("act: stateless latents, satiety wiring, and log-prob additivity") {
    Rng rng(7);

    SUBCASE("FF keeps the latent passed in") {
        const ArchSpec s = tiny(Brain::ff);
        const auto p = NetParams<float>::build(s, 3);
        TensorT<float> latent({5});
        latent[2] = 0.5f;
        const auto obs = random_obs<float>(s, rng);
        Rng act_rng(1);
        const auto r = act(p, latent, obs, 40.0f, act_rng);
        CHECK(r.next_latent == latent);
    }

    SUBCASE("non-IS output is invariant to satiety") {
        const ArchSpec s = tiny(Brain::ff);
        const auto p = NetParams<float>::build(s, 3);
        const auto obs = random_obs<float>(s, rng);
        TensorT<float> latent({5});
        Trace<float> t1, t2;
        forward(p, obs, 0.0f, latent, t1);
        forward(p, obs, 100.0f, latent, t2);
        CHECK(t1.value == t2.value);
        CHECK(t1.logits_h == t2.logits_h);
    }

    SUBCASE("IS wiring feeds satiety/100 into fc2") {
        const ArchSpec s = tiny(Brain::ff_is);
        const auto p = NetParams<float>::build(s, 3);
        const auto obs = random_obs<float>(s, rng);
        TensorT<float> latent({5});
        Trace<float> t0, t100;
        forward(p, obs, 0.0f, latent, t0);
        forward(p, obs, 100.0f, latent, t100);
        CHECK(t0.satiety_in == 0.0f);
        CHECK(t100.satiety_in == 1.0f);
        CHECK(t0.value != t100.value);
    }

    SUBCASE("joint log-prob decomposes into the two heads") {
        const ArchSpec s = tiny(Brain::rnn);
        const auto p = NetParams<float>::build(s, 3);
        const auto obs = random_obs<float>(s, rng);
        TensorT<float> latent({5});
        Rng act_rng(11);
        Trace<float> tr;
        const auto r = act(p, latent, obs, 50.0f, act_rng, &tr);
        const auto head = nn::Categorical<float, 3>::from_logits(tr.logits_h.data());
        const auto vel = nn::Categorical<float, 3>::from_logits(tr.logits_v.data());
        CHECK(r.logp_h == head.log_prob(static_cast<int>(r.action.heading)));
        CHECK(r.logp_v == vel.log_prob(static_cast<int>(r.action.velocity)));
        CHECK(r.next_latent == tr.latent); // recurrent latent advances
    }

    SUBCASE("repeated act with the same inputs is pure") {
        const ArchSpec s = tiny(Brain::rnn_is);
        const auto p = NetParams<float>::build(s, 3);
        const auto obs = random_obs<float>(s, rng);
        TensorT<float> latent({5});
        latent[0] = 0.25f;
        Trace<float> t1, t2;
        forward(p, obs, 60.0f, latent, t1);
        forward(p, obs, 60.0f, latent, t2);
        CHECK(t1.latent == t2.latent);
        CHECK(t1.value == t2.value);
    }
}

TEST_CASE("linear brain with zero biases is positively homogeneous in the image") {
    const ArchSpec s = tiny(Brain::linear);
    const auto p = NetParams<double>::build(s, 17).cast<double>();
    Rng rng(23);
    auto obs = random_obs<double>(s, rng);
    for (size_t i = 0; i < obs.size(); ++i) obs[i] -= 0.5; // zero-mean-ish input
    TensorT<double> latent({5});
    TensorT<double> zero_obs({3, s.height, s.width});
    auto doubled = obs;
    for (size_t i = 0; i < doubled.size(); ++i) doubled[i] *= 2.0;

    Trace<double> t0, t1, t2;
    forward(p, zero_obs, 50.0, latent, t0);
    forward(p, obs, 50.0, latent, t1);
    forward(p, doubled, 50.0, latent, t2);
    CHECK(t0.value == 0.0); // zero biases: f(0) = 0
    CHECK(t2.value == doctest::Approx(2.0 * t1.value - t0.value).epsilon(1e-12));
    for (int i = 0; i < 3; ++i)
        CHECK(t2.logits_h[static_cast<size_t>(i)] ==
              doctest::Approx(2.0 * t1.logits_h[static_cast<size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("whole-net gradient check per brain variant (double precision)") {
    Rng rng(31415);
    for (Brain b : {Brain::linear, Brain::ff, Brain::ff_is, Brain::rnn, Brain::rnn_is}) {
        CAPTURE(to_string(b));
        const ArchSpec s = tiny(b);
        auto p = NetParams<double>::build(s, 7).cast<double>();
        // shift biases off zero so their gradients are exercised at a generic point
        for (auto& [name, t] : p.named())
            if (name.ends_with(".b") || name.starts_with("gru.b"))
                for (size_t i = 0; i < t->size(); ++i)
                    (*t)[i] = rng.uniform(-0.05, 0.05);
        const auto obs = random_obs<double>(s, rng);
        TensorT<double> h0({5});
        testing::randomize(h0, rng, -0.5, 0.5);
        const double satiety = 62.5;

        // scalar objective mixing all outputs
        std::array<double, 3> wh{}, wv{};
        for (auto& w : wh) w = rng.uniform(-1, 1);
        for (auto& w : wv) w = rng.uniform(-1, 1);
        const double wval = rng.uniform(-1, 1);
        const auto fn = [&] {
            Trace<double> t;
            forward(p, obs, satiety, h0, t);
            double sum = wval * t.value;
            for (int i = 0; i < 3; ++i) {
                sum += wh[static_cast<size_t>(i)] * t.logits_h[static_cast<size_t>(i)];
                sum += wv[static_cast<size_t>(i)] * t.logits_v[static_cast<size_t>(i)];
            }
            return sum;
        };

        Trace<double> t;
        forward(p, obs, satiety, h0, t);
        auto acc = NetParams<double>::zeros_like(s);
        TensorT<double> dinput, dh_prev({5});
        backward<double>(p, t, wh, wv, wval, nullptr, &acc, &dinput, &dh_prev);

        auto pn = p.named();
        auto gn = acc.named();
        double worst = 0;
        for (size_t i = 0; i < pn.size(); ++i) {
            // sample large tensors instead of sweeping every element
            auto& param = *pn[i].second;
            auto& grad = *gn[i].second;
            if (param.size() <= 64) {
                worst = std::max(worst, testing::max_rel_grad_error(param, grad, fn));
            } else {
                Rng pick(static_cast<uint64_t>(i) * 17 + 3);
                for (int k = 0; k < 24; ++k) {
                    const size_t j = pick.uniform_int(param.size());
                    const double keep = param[j];
                    const double h = 1e-5;
                    param[j] = keep + h;
                    const double fp = fn();
                    param[j] = keep - h;
                    const double fm = fn();
                    param[j] = keep;
                    const double num = (fp - fm) / (2 * h);
                    const double denom = std::max({std::abs(num), std::abs(grad[j]), 1e-4});
                    worst = std::max(worst, std::abs(num - grad[j]) / denom);
                }
            }
        }
        CHECK(worst < 1e-6);

        // input gradient and BPTT hidden-state gradient
        TensorT<double> obs_mut = obs;
        const auto fn_obs = [&] {
            Trace<double> tt;
            forward(p, obs_mut, satiety, h0, tt);
            double sum = wval * tt.value;
            for (int i = 0; i < 3; ++i) {
                sum += wh[static_cast<size_t>(i)] * tt.logits_h[static_cast<size_t>(i)];
                sum += wv[static_cast<size_t>(i)] * tt.logits_v[static_cast<size_t>(i)];
            }
            return sum;
        };
        Rng pick(99);
        double worst_in = 0;
        for (int k = 0; k < 16; ++k) {
            const size_t j = pick.uniform_int(obs_mut.size());
            const double keep = obs_mut[j];
            const double h = 1e-5;
            obs_mut[j] = keep + h;
            const double fp = fn_obs();
            obs_mut[j] = keep - h;
            const double fm = fn_obs();
            obs_mut[j] = keep;
            const double num = (fp - fm) / (2 * h);
            const double denom = std::max({std::abs(num), std::abs(dinput[j]), 1e-4});
            worst_in = std::max(worst_in, std::abs(num - dinput[j]) / denom);
        }
        CHECK(worst_in < 1e-6);

        if (brain_recurrent(b)) {
            double worst_h = testing::max_rel_grad_error(h0, dh_prev, fn);
            CHECK(worst_h < 1e-6);
        }
    }
}

TEST_CASE("value_input_gradient: finite differences and degenerate cases") {
    const ArchSpec s = tiny(Brain::ff);
    Rng rng(5150);

    SUBCASE("matches finite differences on 8 random pixels within single precision") {
        const auto p = NetParams<float>::build(s, 77);
        auto obs = random_obs<float>(s, rng);
        TensorT<float> latent({5});
        float v0 = 0;
        const auto grad = value_input_gradient(p, latent, obs, 50.0f, &v0);
        REQUIRE(grad.shape() == obs.shape());

        // the finite-difference oracle runs on the double-cast network so its
        // own noise stays far below the 1e-3 single-precision tolerance
        const auto pd = p.cast<double>();
        auto obs_d = obs.cast<double>();
        TensorT<double> latent_d({5});
        Rng pick(8);
        for (int k = 0; k < 8; ++k) {
            const size_t j = pick.uniform_int(obs_d.size());
            const double keep = obs_d[j];
            const double h = 1e-5;
            Trace<double> t;
            obs_d[j] = keep + h;
            forward(pd, obs_d, 50.0, latent_d, t);
            const double fp = t.value;
            obs_d[j] = keep - h;
            forward(pd, obs_d, 50.0, latent_d, t);
            const double fm = t.value;
            obs_d[j] = keep;
            const double num = (fp - fm) / (2.0 * h);
            const double denom = std::max({std::abs(num), std::abs(static_cast<double>(grad[j])), 1e-3});
            CHECK(std::abs(num - grad[j]) / denom < 1e-3);
        }
    }

    SUBCASE("all-zero parameters give a zero gradient") {
        const auto p = NetParams<float>::zeros_like(s);
        const auto obs = random_obs<float>(s, rng);
        TensorT<float> latent({5});
        const auto grad = value_input_gradient(p, latent, obs, 50.0f);
        for (size_t i = 0; i < grad.size(); ++i) CHECK(grad[i] == 0.0f);
    }

    SUBCASE("linear variant gradient is the affine map's coefficients along a ray") {
        const ArchSpec ls = tiny(Brain::linear);
        const auto p = NetParams<double>::build(ls, 9).cast<double>();
        TensorT<double> latent({5});
        Rng r2(1);
        const auto a = random_obs<double>(ls, r2);
        // zero biases make the net positively homogeneous: scaling the image
        // preserves max-pool routing, so the gradient is a fixed coefficient map
        auto b = a;
        for (size_t i = 0; i < b.size(); ++i) b[i] *= 2.5;
        const auto ga = value_input_gradient(p, latent, a, 30.0);
        const auto gb = value_input_gradient(p, latent, b, 90.0);
        double diff = 0;
        for (size_t i = 0; i < ga.size(); ++i) diff = std::max(diff, std::abs(ga[i] - gb[i]));
        CHECK(diff < 1e-12);

        // and the gradient exactly reproduces the value: V = g . x (Euler)
        double dot = 0;
        for (size_t i = 0; i < ga.size(); ++i) dot += ga[i] * a[i];
        Trace<double> t;
        forward(p, a, 30.0, latent, t);
        CHECK(dot == doctest::Approx(t.value).epsilon(1e-12));
    }
}

TEST_CASE("checkpoint round-trip preserves params, optimizer state, and meta") {
    const ArchSpec s = tiny(Brain::rnn_is);
    Checkpoint c;
    c.params = NetParams<float>::build(s, 21);
    c.optim = OptimState::sized(s);
    c.optim.t = 17;
    c.optim.m.fc1_w.fill(0.25f);
    c.meta["config_fingerprint"] = "00000000deadbeef";
    c.meta["frames"] = 12345;
    c.trainer_state = "opaque-blob";

    const auto dir = std::filesystem::temp_directory_path() / "forager_agent_tests";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "ckpt.fgt").string();
    c.save(path);

    const Checkpoint r = Checkpoint::load(path);
    CHECK(r.params.spec.brain == Brain::rnn_is);
    auto an = c.params.named();
    auto bn = r.params.named();
    for (size_t i = 0; i < an.size(); ++i) CHECK(*an[i].second == *bn[i].second);
    CHECK(r.optim.t == 17);
    CHECK(r.optim.m.fc1_w[0] == 0.25f);
    CHECK(r.meta.at("frames").get<int>() == 12345);
    CHECK(r.trainer_state == "opaque-blob");

    CHECK_THROWS_AS((void)Checkpoint::load(path, 0x1234567812345678ULL), format_error);
    CHECK_NOTHROW((void)Checkpoint::load(path, 0xdeadbeefULL));
}

TEST_CASE("non-finite activations surface as named numerical errors") {
    const ArchSpec s = tiny(Brain::ff);
    auto p = NetParams<float>::build(s, 4);
    p.bp_w[0] = std::numeric_limits<float>::quiet_NaN();
    Rng rng(1);
    const auto obs = random_obs<float>(s, rng);
    TensorT<float> latent({5});
    Trace<float> t;
    CHECK_THROWS_WITH_AS(forward(p, obs, 50.0f, latent, t), doctest::Contains("non-finite"),
                         training_error);
}
