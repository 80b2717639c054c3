#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "agent/arch.hpp"
#include "nn/categorical.hpp"
#include "nn/gru.hpp"
#include "nn/ops.hpp"
#include "raster/image.hpp"
#include "world/world.hpp"

// The policy/value network: PR (pass-through) -> BP conv3+avgpool3 ->
// RGC conv3+avgpool3 -> LGN conv1 -> V1 conv4+maxpool4 -> three FC layers ->
// brain head (FC+sigmoid, GRU, or identity) -> linear actor heads and critic.
// The linear variant replaces every activation with identity; pooling stays.

namespace forager::agent {

template <typename T>
struct NetParams {
    ArchSpec spec;

    nn::TensorT<T> bp_w, bp_b;
    nn::TensorT<T> rgc_w, rgc_b;
    nn::TensorT<T> lgn_w, lgn_b;
    nn::TensorT<T> v1_w, v1_b;
    nn::TensorT<T> fc1_w, fc1_b, fc2_w, fc2_b, fc3_w, fc3_b;
    nn::TensorT<T> head_w, head_b; // FF / linear brain head
    nn::GruParams<T> gru;          // RNN brains
    nn::TensorT<T> actor_h_w, actor_h_b, actor_v_w, actor_v_b;
    nn::TensorT<T> critic_w, critic_b;

    std::vector<std::pair<std::string, nn::TensorT<T>*>> named() {
        std::vector<std::pair<std::string, nn::TensorT<T>*>> v = {
            {"bp.w", &bp_w},   {"bp.b", &bp_b},   {"rgc.w", &rgc_w}, {"rgc.b", &rgc_b},
            {"lgn.w", &lgn_w}, {"lgn.b", &lgn_b}, {"v1.w", &v1_w},   {"v1.b", &v1_b},
            {"fc1.w", &fc1_w}, {"fc1.b", &fc1_b}, {"fc2.w", &fc2_w}, {"fc2.b", &fc2_b},
            {"fc3.w", &fc3_w}, {"fc3.b", &fc3_b}};
        if (brain_recurrent(spec.brain)) {
            v.insert(v.end(), {{"gru.wr", &gru.wr},
                               {"gru.ur", &gru.ur},
                               {"gru.br", &gru.br},
                               {"gru.wz", &gru.wz},
                               {"gru.uz", &gru.uz},
                               {"gru.bz", &gru.bz},
                               {"gru.wn", &gru.wn},
                               {"gru.un", &gru.un},
                               {"gru.bn", &gru.bn}});
        } else {
            v.insert(v.end(), {{"head.w", &head_w}, {"head.b", &head_b}});
        }
        v.insert(v.end(), {{"actor_h.w", &actor_h_w},
                           {"actor_h.b", &actor_h_b},
                           {"actor_v.w", &actor_v_w},
                           {"actor_v.b", &actor_v_b},
                           {"critic.w", &critic_w},
                           {"critic.b", &critic_b}});
        return v;
    }

    std::vector<std::pair<std::string, const nn::TensorT<T>*>> named() const {
        auto mut = const_cast<NetParams*>(this)->named();
        std::vector<std::pair<std::string, const nn::TensorT<T>*>> v;
        v.reserve(mut.size());
        for (auto& [n, p] : mut) v.emplace_back(n, p);
        return v;
    }

    size_t param_count() const {
        size_t n = 0;
        for (const auto& [name, t] : named()) n += t->size();
        return n;
    }

    template <typename U>
    NetParams<U> cast() const {
        NetParams<U> out = NetParams<U>::zeros_like(spec);
        auto src = named();
        auto dst = out.named();
        for (size_t i = 0; i < src.size(); ++i) *dst[i].second = src[i].second->template cast<U>();
        return out;
    }

    static NetParams zeros_like(const ArchSpec& spec) {
        spec.validate();
        NetParams p;
        p.spec = spec;
        const int nbc = spec.n_bc, nlgn = spec.n_lgn, nfc = spec.resolved_n_fc();
        const auto ch = spec.chain();
        const int fc2_in = nfc + (brain_input_satiety(spec.brain) ? 1 : 0);
        p.bp_w = nn::TensorT<T>({nbc, 3, 3, 3});
        p.bp_b = nn::TensorT<T>({nbc});
        p.rgc_w = nn::TensorT<T>({2 * nbc, nbc, 3, 3});
        p.rgc_b = nn::TensorT<T>({2 * nbc});
        p.lgn_w = nn::TensorT<T>({nlgn, 2 * nbc, 1, 1});
        p.lgn_b = nn::TensorT<T>({nlgn});
        p.v1_w = nn::TensorT<T>({4 * nbc, nlgn, 4, 4});
        p.v1_b = nn::TensorT<T>({4 * nbc});
        p.fc1_w = nn::TensorT<T>({nfc, ch.flat});
        p.fc1_b = nn::TensorT<T>({nfc});
        p.fc2_w = nn::TensorT<T>({nfc, fc2_in});
        p.fc2_b = nn::TensorT<T>({nfc});
        p.fc3_w = nn::TensorT<T>({nfc, nfc});
        p.fc3_b = nn::TensorT<T>({nfc});
        if (brain_recurrent(spec.brain)) {
            p.gru = nn::GruParams<T>::sized(nfc, nfc);
        } else {
            p.head_w = nn::TensorT<T>({nfc, nfc});
            p.head_b = nn::TensorT<T>({nfc});
        }
        p.actor_h_w = nn::TensorT<T>({3, nfc});
        p.actor_h_b = nn::TensorT<T>({3});
        p.actor_v_w = nn::TensorT<T>({3, nfc});
        p.actor_v_b = nn::TensorT<T>({3});
        p.critic_w = nn::TensorT<T>({1, nfc});
        p.critic_b = nn::TensorT<T>({1});
        return p;
    }

    // Weights uniform in +-sqrt(1/fan_in); all biases zero.
    static NetParams build(const ArchSpec& spec, uint64_t seed) {
        NetParams p = zeros_like(spec);
        Rng rng(derive_seed(seed, 0x6e657477ULL)); // "netw"
        auto init_fan = [&rng](nn::TensorT<T>& w, int fan_in) {
            const double lim = std::sqrt(1.0 / fan_in);
            for (size_t i = 0; i < w.size(); ++i)
                w[i] = static_cast<T>(rng.uniform(-lim, lim));
        };
        auto init_conv = [&](nn::TensorT<T>& w) {
            init_fan(w, w.dim(1) * w.dim(2) * w.dim(3));
        };
        auto init_lin = [&](nn::TensorT<T>& w) { init_fan(w, w.dim(1)); };
        init_conv(p.bp_w);
        init_conv(p.rgc_w);
        init_conv(p.lgn_w);
        init_conv(p.v1_w);
        init_lin(p.fc1_w);
        init_lin(p.fc2_w);
        init_lin(p.fc3_w);
        if (brain_recurrent(spec.brain)) {
            init_lin(p.gru.wr);
            init_lin(p.gru.wz);
            init_lin(p.gru.wn);
            init_lin(p.gru.ur);
            init_lin(p.gru.uz);
            init_lin(p.gru.un);
        } else {
            init_lin(p.head_w);
        }
        init_lin(p.actor_h_w);
        init_lin(p.actor_v_w);
        init_lin(p.critic_w);
        return p;
    }
};

// --- Elementwise accumulation helpers used by the trainer ---

template <typename T>
void grads_add(NetParams<T>& acc, const NetParams<T>& g) {
    auto a = acc.named();
    auto b = g.named();
    for (size_t i = 0; i < a.size(); ++i) {
        auto& dst = *a[i].second;
        const auto& src = *b[i].second;
        for (size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
}

template <typename T>
void grads_scale(NetParams<T>& acc, T s) {
    for (auto& [name, t] : acc.named())
        for (size_t j = 0; j < t->size(); ++j) (*t)[j] *= s;
}

template <typename T>
void grads_zero(NetParams<T>& acc) {
    for (auto& [name, t] : acc.named()) t->fill(T(0));
}

template <typename T>
double grads_sq_norm(const NetParams<T>& g) {
    double s = 0;
    for (const auto& [name, t] : g.named())
        for (size_t j = 0; j < t->size(); ++j)
            s += static_cast<double>((*t)[j]) * static_cast<double>((*t)[j]);
    return s;
}

// --- Forward / backward ---

template <typename T>
struct Trace {
    nn::TensorT<T> input;
    T satiety_in = 0;
    nn::TensorT<T> bp_pre, bp_act, bp_pool;
    nn::TensorT<T> rgc_pre, rgc_act, rgc_pool;
    nn::TensorT<T> lgn_pre, lgn_act;
    nn::TensorT<T> v1_pre, v1_act;
    nn::MaxPoolResult<T> v1_pool;
    nn::TensorT<T> flat, fc1_pre, fc1_act, fc2_in, fc2_pre, fc2_act, fc3_pre, fc3_act;
    nn::TensorT<T> head_pre;
    nn::GruTrace<T> gru;
    nn::TensorT<T> latent;
    nn::TensorT<T> logits_h, logits_v;
    T value = 0;
};

namespace detail {

template <typename T>
nn::TensorT<T> act_fwd(const nn::TensorT<T>& x, bool identity) {
    return identity ? x : nn::elu(x);
}

template <typename T>
nn::TensorT<T> act_bwd(const nn::TensorT<T>& dout, const nn::TensorT<T>& pre, bool identity) {
    return identity ? dout : nn::elu_backward(dout, pre);
}

template <typename T>
nn::TensorT<T> reshape(const nn::TensorT<T>& t, std::vector<int> shape) {
    nn::TensorT<T> out(std::move(shape));
    if (out.size() != t.size()) throw usage_error("reshape: element count mismatch");
    for (size_t i = 0; i < t.size(); ++i) out[i] = t[i];
    return out;
}

} // namespace detail

// One inference step. `h_prev` is ignored for non-recurrent brains. Satiety
// arrives in [0,100] and is rescaled unless spec.satiety_raw.
template <typename T>
void forward(const NetParams<T>& p, const nn::TensorT<T>& obs, T satiety,
             const nn::TensorT<T>& h_prev, Trace<T>& t) {
    const ArchSpec& spec = p.spec;
    nn::check_shape(obs, {3, spec.height, spec.width}, "agent input");
    const bool lin = spec.brain == Brain::linear;
    const int nfc = spec.resolved_n_fc();

    t.input = obs;
    t.satiety_in = spec.satiety_raw ? satiety : satiety / T(100);

    t.bp_pre = nn::conv2d_same(obs, p.bp_w, p.bp_b);
    t.bp_act = detail::act_fwd(t.bp_pre, lin);
    t.bp_pool = nn::avg_pool(t.bp_act, 3);
    t.rgc_pre = nn::conv2d_same(t.bp_pool, p.rgc_w, p.rgc_b);
    t.rgc_act = detail::act_fwd(t.rgc_pre, lin);
    t.rgc_pool = nn::avg_pool(t.rgc_act, 3);
    t.lgn_pre = nn::conv2d_same(t.rgc_pool, p.lgn_w, p.lgn_b);
    t.lgn_act = detail::act_fwd(t.lgn_pre, lin);
    t.v1_pre = nn::conv2d_same(t.lgn_act, p.v1_w, p.v1_b);
    t.v1_act = detail::act_fwd(t.v1_pre, lin);
    t.v1_pool = nn::max_pool(t.v1_act, 4);

    t.flat = detail::reshape(t.v1_pool.out, {static_cast<int>(t.v1_pool.out.size())});
    t.fc1_pre = nn::linear(t.flat, p.fc1_w, p.fc1_b);
    t.fc1_act = detail::act_fwd(t.fc1_pre, lin);

    if (brain_input_satiety(spec.brain)) {
        t.fc2_in = nn::TensorT<T>({nfc + 1});
        for (int i = 0; i < nfc; ++i) t.fc2_in[static_cast<size_t>(i)] = t.fc1_act[static_cast<size_t>(i)];
        t.fc2_in[static_cast<size_t>(nfc)] = t.satiety_in;
    } else {
        t.fc2_in = t.fc1_act;
    }
    t.fc2_pre = nn::linear(t.fc2_in, p.fc2_w, p.fc2_b);
    t.fc2_act = detail::act_fwd(t.fc2_pre, lin);
    t.fc3_pre = nn::linear(t.fc2_act, p.fc3_w, p.fc3_b);
    t.fc3_act = detail::act_fwd(t.fc3_pre, lin);

    if (brain_recurrent(spec.brain)) {
        nn::check_shape(h_prev, {nfc}, "agent latent");
        t.gru = nn::gru_forward(p.gru, t.fc3_act, h_prev);
        t.latent = t.gru.h_next;
    } else {
        t.head_pre = nn::linear(t.fc3_act, p.head_w, p.head_b);
        t.latent = lin ? t.head_pre : nn::sigmoid(t.head_pre);
    }

    t.logits_h = nn::linear(t.latent, p.actor_h_w, p.actor_h_b);
    t.logits_v = nn::linear(t.latent, p.actor_v_w, p.actor_v_b);
    const nn::TensorT<T> v = nn::linear(t.latent, p.critic_w, p.critic_b);
    t.value = v[0];

    // a NaN anywhere upstream lands in these few values; name the stage
    for (size_t i = 0; i < t.latent.size(); ++i)
        if (!std::isfinite(static_cast<double>(t.latent[i])))
            throw training_error("non-finite activation in the " +
                                 std::string(brain_recurrent(spec.brain) ? "gru" : "brain head") +
                                 " latent");
    for (int i = 0; i < 3; ++i)
        if (!std::isfinite(static_cast<double>(t.logits_h[static_cast<size_t>(i)])) ||
            !std::isfinite(static_cast<double>(t.logits_v[static_cast<size_t>(i)])))
            throw training_error("non-finite activation in the actor heads");
    if (!std::isfinite(static_cast<double>(t.value)))
        throw training_error("non-finite activation in the critic");
}

// Exact gradients. dh_next carries the future-timestep gradient into the
// latent for BPTT (pass empty for the last step / non-recurrent brains).
// When `acc` is null only input/latent gradients are produced.
template <typename T>
void backward(const NetParams<T>& p, const Trace<T>& t, const std::array<T, 3>& dlogits_h,
              const std::array<T, 3>& dlogits_v, T dvalue, const nn::TensorT<T>* dh_next,
              NetParams<T>* acc, nn::TensorT<T>* dinput, nn::TensorT<T>* dh_prev) {
    const ArchSpec& spec = p.spec;
    const bool lin = spec.brain == Brain::linear;
    const int nfc = spec.resolved_n_fc();

    nn::TensorT<T> dlatent({nfc});
    nn::TensorT<T> dl_h({3}), dl_v({3}), dval({1});
    for (int i = 0; i < 3; ++i) {
        dl_h[static_cast<size_t>(i)] = dlogits_h[static_cast<size_t>(i)];
        dl_v[static_cast<size_t>(i)] = dlogits_v[static_cast<size_t>(i)];
    }
    dval[0] = dvalue;

    nn::TensorT<T> db_sink_h({3}), db_sink_v({3}), db_sink_c({1});
    if (acc) {
        nn::linear_backward_acc(t.latent, p.actor_h_w, dl_h, acc->actor_h_w, acc->actor_h_b,
                                &dlatent);
        nn::linear_backward_acc(t.latent, p.actor_v_w, dl_v, acc->actor_v_w, acc->actor_v_b,
                                &dlatent);
        nn::linear_backward_acc(t.latent, p.critic_w, dval, acc->critic_w, acc->critic_b,
                                &dlatent);
    } else {
        nn::TensorT<T> w_sink_h({3, nfc}), w_sink_v({3, nfc}), w_sink_c({1, nfc});
        nn::linear_backward_acc(t.latent, p.actor_h_w, dl_h, w_sink_h, db_sink_h, &dlatent);
        nn::linear_backward_acc(t.latent, p.actor_v_w, dl_v, w_sink_v, db_sink_v, &dlatent);
        nn::linear_backward_acc(t.latent, p.critic_w, dval, w_sink_c, db_sink_c, &dlatent);
    }
    if (dh_next && !dh_next->empty())
        for (int i = 0; i < nfc; ++i) dlatent[static_cast<size_t>(i)] += (*dh_next)[static_cast<size_t>(i)];

    nn::TensorT<T> dfc3_act({nfc});
    if (brain_recurrent(spec.brain)) {
        nn::TensorT<T> dh_prev_local({nfc});
        if (acc) {
            nn::gru_backward_acc(p.gru, t.gru, dlatent, acc->gru, dfc3_act, dh_prev_local);
        } else {
            nn::GruGrads<T> g = nn::gru_backward(p.gru, t.gru, dlatent);
            dfc3_act = g.dx;
            dh_prev_local = g.dh;
        }
        if (dh_prev) *dh_prev = dh_prev_local;
    } else {
        // latent = brain_act(head_pre)
        nn::TensorT<T> dhead_pre =
            lin ? dlatent : nn::sigmoid_backward(dlatent, t.latent);
        if (acc) {
            nn::linear_backward_acc(t.fc3_act, p.head_w, dhead_pre, acc->head_w, acc->head_b,
                                    &dfc3_act);
        } else {
            auto g = nn::linear_backward(t.fc3_act, p.head_w, dhead_pre);
            dfc3_act = g.input;
        }
        if (dh_prev) dh_prev->fill(T(0));
    }

    nn::TensorT<T> dfc3_pre = detail::act_bwd(dfc3_act, t.fc3_pre, lin);
    nn::TensorT<T> dfc2_act({nfc});
    if (acc)
        nn::linear_backward_acc(t.fc2_act, p.fc3_w, dfc3_pre, acc->fc3_w, acc->fc3_b, &dfc2_act);
    else
        dfc2_act = nn::linear_backward(t.fc2_act, p.fc3_w, dfc3_pre).input;

    nn::TensorT<T> dfc2_pre = detail::act_bwd(dfc2_act, t.fc2_pre, lin);
    nn::TensorT<T> dfc2_in({static_cast<int>(t.fc2_in.size())});
    if (acc)
        nn::linear_backward_acc(t.fc2_in, p.fc2_w, dfc2_pre, acc->fc2_w, acc->fc2_b, &dfc2_in);
    else
        dfc2_in = nn::linear_backward(t.fc2_in, p.fc2_w, dfc2_pre).input;

    nn::TensorT<T> dfc1_act({nfc});
    for (int i = 0; i < nfc; ++i) dfc1_act[static_cast<size_t>(i)] = dfc2_in[static_cast<size_t>(i)];

    nn::TensorT<T> dfc1_pre = detail::act_bwd(dfc1_act, t.fc1_pre, lin);
    nn::TensorT<T> dflat({static_cast<int>(t.flat.size())});
    if (acc)
        nn::linear_backward_acc(t.flat, p.fc1_w, dfc1_pre, acc->fc1_w, acc->fc1_b, &dflat);
    else
        dflat = nn::linear_backward(t.flat, p.fc1_w, dfc1_pre).input;

    nn::TensorT<T> dv1_pool = detail::reshape(dflat, t.v1_pool.out.shape());
    nn::TensorT<T> dv1_act = nn::max_pool_backward(dv1_pool, t.v1_pool, t.v1_act.shape());
    nn::TensorT<T> dv1_pre = detail::act_bwd(dv1_act, t.v1_pre, lin);
    auto gv1 = nn::conv2d_same_backward(t.lgn_act, p.v1_w, dv1_pre);
    if (acc) {
        nn::grads_add_tensor(acc->v1_w, gv1.kernels);
        nn::grads_add_tensor(acc->v1_b, gv1.bias);
    }

    nn::TensorT<T> dlgn_pre = detail::act_bwd(gv1.input, t.lgn_pre, lin);
    auto glgn = nn::conv2d_same_backward(t.rgc_pool, p.lgn_w, dlgn_pre);
    if (acc) {
        nn::grads_add_tensor(acc->lgn_w, glgn.kernels);
        nn::grads_add_tensor(acc->lgn_b, glgn.bias);
    }

    nn::TensorT<T> drgc_act = nn::avg_pool_backward(glgn.input, t.rgc_act.shape(), 3);
    nn::TensorT<T> drgc_pre = detail::act_bwd(drgc_act, t.rgc_pre, lin);
    auto grgc = nn::conv2d_same_backward(t.bp_pool, p.rgc_w, drgc_pre);
    if (acc) {
        nn::grads_add_tensor(acc->rgc_w, grgc.kernels);
        nn::grads_add_tensor(acc->rgc_b, grgc.bias);
    }

    nn::TensorT<T> dbp_act = nn::avg_pool_backward(grgc.input, t.bp_act.shape(), 3);
    nn::TensorT<T> dbp_pre = detail::act_bwd(dbp_act, t.bp_pre, lin);
    auto gbp = nn::conv2d_same_backward(t.input, p.bp_w, dbp_pre, dinput != nullptr);
    if (acc) {
        nn::grads_add_tensor(acc->bp_w, gbp.kernels);
        nn::grads_add_tensor(acc->bp_b, gbp.bias);
    }
    if (dinput) *dinput = gbp.input;
}

// --- High-level entry points ---

template <typename T>
struct ActResult {
    world::AgentAction action;
    T logp_h = 0, logp_v = 0;
    std::array<T, 3> probs_h{}, probs_v{};
    T value = 0;
    nn::TensorT<T> next_latent;
};

template <typename T>
nn::TensorT<T> obs_from_image(const raster::Image& img) {
    nn::TensorT<T> t({3, img.height, img.width});
    const size_t plane = img.pixel_count();
    for (size_t p = 0; p < plane; ++p) {
        t[p] = static_cast<T>(img.data[p * 3 + 0]);
        t[plane + p] = static_cast<T>(img.data[p * 3 + 1]);
        t[2 * plane + p] = static_cast<T>(img.data[p * 3 + 2]);
    }
    return t;
}

template <typename T>
ActResult<T> act(const NetParams<T>& p, const nn::TensorT<T>& latent, const nn::TensorT<T>& obs,
                 T satiety, Rng& rng, Trace<T>* trace_out = nullptr) {
    Trace<T> local;
    Trace<T>& t = trace_out ? *trace_out : local;
    forward(p, obs, satiety, latent, t);

    const auto head = nn::Categorical<T, 3>::from_logits(t.logits_h.data());
    const auto vel = nn::Categorical<T, 3>::from_logits(t.logits_v.data());
    ActResult<T> r;
    r.action.heading = static_cast<world::Heading>(head.sample(rng));
    r.action.velocity = static_cast<world::Velocity>(vel.sample(rng));
    r.logp_h = head.log_prob(static_cast<int>(r.action.heading));
    r.logp_v = vel.log_prob(static_cast<int>(r.action.velocity));
    r.probs_h = head.probs;
    r.probs_v = vel.probs;
    r.value = t.value;
    r.next_latent = brain_recurrent(p.spec.brain) ? t.latent : latent;
    return r;
}

// d value / d input pixels, satiety held fixed.
template <typename T>
nn::TensorT<T> value_input_gradient(const NetParams<T>& p, const nn::TensorT<T>& latent,
                                    const nn::TensorT<T>& obs, T satiety, T* value_out = nullptr) {
    Trace<T> t;
    forward(p, obs, satiety, latent, t);
    if (value_out) *value_out = t.value;
    nn::TensorT<T> dinput;
    backward<T>(p, t, {T(0), T(0), T(0)}, {T(0), T(0), T(0)}, T(1), nullptr, nullptr, &dinput,
                nullptr);
    return dinput;
}

} // namespace forager::agent
