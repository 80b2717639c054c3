#pragma once

#include "nn/ops.hpp"

namespace forager::nn {

// Gated recurrent unit:
//   r  = sigmoid(Wr x + Ur h + br)
//   z  = sigmoid(Wz x + Uz h + bz)
//   n  = tanh(Wn x + r * (Un h) + bn)
//   h' = (1 - z) * n + z * h

template <typename T>
struct GruParams {
    TensorT<T> wr, wz, wn; // [H, X]
    TensorT<T> ur, uz, un; // [H, H]
    TensorT<T> br, bz, bn; // [H]

    static GruParams sized(int x_dim, int h_dim) {
        GruParams p;
        p.wr = TensorT<T>({h_dim, x_dim});
        p.wz = TensorT<T>({h_dim, x_dim});
        p.wn = TensorT<T>({h_dim, x_dim});
        p.ur = TensorT<T>({h_dim, h_dim});
        p.uz = TensorT<T>({h_dim, h_dim});
        p.un = TensorT<T>({h_dim, h_dim});
        p.br = TensorT<T>({h_dim});
        p.bz = TensorT<T>({h_dim});
        p.bn = TensorT<T>({h_dim});
        return p;
    }
};

template <typename T>
struct GruGrads {
    GruParams<T> p;      // parameter gradients
    TensorT<T> dx, dh;   // input and previous-hidden gradients
};

// Values cached by the forward pass that the backward pass needs.
template <typename T>
struct GruTrace {
    TensorT<T> x, h_prev;
    TensorT<T> r, z, n;
    TensorT<T> un_h; // Un h_prev before the reset gate
    TensorT<T> h_next;
};

template <typename T>
GruTrace<T> gru_forward(const GruParams<T>& p, const TensorT<T>& x, const TensorT<T>& h) {
    const int hd = p.ur.dim(0);
    if (x.rank() != 1 || x.dim(0) != p.wr.dim(1))
        throw usage_error("gru_forward: input width " + x.shape_str() + " does not match Wr " +
                          p.wr.shape_str());
    check_shape(h, {hd}, "gru_forward hidden");

    GruTrace<T> t;
    t.x = x;
    t.h_prev = h;

    TensorT<T> ar = linear(x, p.wr, p.br);
    TensorT<T> az = linear(x, p.wz, p.bz);
    const TensorT<T> zero_b({hd});
    TensorT<T> ur_h = linear(h, p.ur, zero_b);
    TensorT<T> uz_h = linear(h, p.uz, zero_b);
    t.un_h = linear(h, p.un, zero_b);
    for (int i = 0; i < hd; ++i) {
        ar[static_cast<size_t>(i)] += ur_h[static_cast<size_t>(i)];
        az[static_cast<size_t>(i)] += uz_h[static_cast<size_t>(i)];
    }
    t.r = sigmoid(ar);
    t.z = sigmoid(az);

    TensorT<T> an = linear(x, p.wn, p.bn);
    for (int i = 0; i < hd; ++i)
        an[static_cast<size_t>(i)] += t.r[static_cast<size_t>(i)] * t.un_h[static_cast<size_t>(i)];
    t.n = tanh_act(an);

    t.h_next = TensorT<T>({hd});
    for (int i = 0; i < hd; ++i) {
        const size_t s = static_cast<size_t>(i);
        t.h_next[s] = (T(1) - t.z[s]) * t.n[s] + t.z[s] * h[s];
    }
    return t;
}

// Accumulates parameter gradients into `acc` and returns dx / dh_prev through
// the out-params; callers chain dh across a sequence for BPTT.
template <typename T>
void gru_backward_acc(const GruParams<T>& p, const GruTrace<T>& t, const TensorT<T>& dh_next,
                      GruParams<T>& acc, TensorT<T>& dx, TensorT<T>& dh_prev) {
    const int hd = p.ur.dim(0);
    check_shape(dh_next, {hd}, "gru_backward dh_next");

    TensorT<T> dz({hd}), dn({hd}), da_n({hd}), da_r({hd}), da_z({hd}), dun_h({hd});
    for (int i = 0; i < hd; ++i) {
        const size_t s = static_cast<size_t>(i);
        dz[s] = dh_next[s] * (t.h_prev[s] - t.n[s]);
        dn[s] = dh_next[s] * (T(1) - t.z[s]);
        dh_prev[s] += dh_next[s] * t.z[s];
        da_n[s] = dn[s] * (T(1) - t.n[s] * t.n[s]);
        const T dr = da_n[s] * t.un_h[s];
        dun_h[s] = da_n[s] * t.r[s];
        da_r[s] = dr * t.r[s] * (T(1) - t.r[s]);
        da_z[s] = dz[s] * t.z[s] * (T(1) - t.z[s]);
    }

    linear_backward_acc(t.x, p.wn, da_n, acc.wn, acc.bn, &dx);
    linear_backward_acc(t.x, p.wr, da_r, acc.wr, acc.br, &dx);
    linear_backward_acc(t.x, p.wz, da_z, acc.wz, acc.bz, &dx);

    TensorT<T> zero_db({hd});
    linear_backward_acc(t.h_prev, p.un, dun_h, acc.un, zero_db, &dh_prev);
    linear_backward_acc(t.h_prev, p.ur, da_r, acc.ur, zero_db, &dh_prev);
    linear_backward_acc(t.h_prev, p.uz, da_z, acc.uz, zero_db, &dh_prev);
}

template <typename T>
GruGrads<T> gru_backward(const GruParams<T>& p, const GruTrace<T>& t, const TensorT<T>& dh_next) {
    const int hd = p.ur.dim(0);
    const int xd = p.wr.dim(1);
    GruGrads<T> g{GruParams<T>::sized(xd, hd), TensorT<T>({xd}), TensorT<T>({hd})};
    gru_backward_acc(p, t, dh_next, g.p, g.dx, g.dh);
    return g;
}

} // namespace forager::nn
