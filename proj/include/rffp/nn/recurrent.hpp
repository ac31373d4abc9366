#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rffp/errors.hpp"
#include "rffp/nn/layers.hpp"
#include "rffp/nn/tensor.hpp"

// Bidirectional GRU / LSTM layers with full backpropagation through time.
//
// Gate conventions:
//   GRU   z = sig(Wz x + Uz h + bz), r = sig(Wr x + Ur h + br),
//         hc = tanh(Wh x + Uh (r*h) + bh), h' = (1-z)*h + z*hc
//   LSTM  i,f,o = sig(.), g = tanh(.), c' = f*c + i*g, h' = o*tanh(c')
//
// Recurrent dropout uses a single mask per direction per forward pass, applied
// to the previous hidden state wherever it feeds a gate; the state update
// itself is not masked, so information can still flow along time.
//
// Parameter layout per direction:
//   GRU:  W (F x 3H, gate columns z|r|h), U_zr (H x 2H), U_h (H x H), b (3H)
//   LSTM: W (F x 4H, gate columns i|f|g|o), U (H x 4H), b (4H)
// The forward direction's block precedes the backward direction's block.

namespace rffp::nn {

namespace detail {

template <typename T>
inline T sigmoid(T v) {
    return T(1) / (T(1) + std::exp(-v));
}

}  // namespace detail

// Single-sample GRU step matching the gate convention above; the reference
// entry point for the cell contract (the batched layer is tested against a
// composition of these).
template <typename T>
struct GruCellParams {
    std::vector<T> w;     // F x 3H
    std::vector<T> u_zr;  // H x 2H
    std::vector<T> u_h;   // H x H
    std::vector<T> b;     // 3H
    std::size_t in = 0;
    std::size_t hidden = 0;
};

template <typename T>
inline std::vector<T> gru_cell(std::span<const T> x, std::span<const T> h_prev,
                               const GruCellParams<T>& p) {
    if (x.size() != p.in || h_prev.size() != p.hidden)
        errors::shape("gru_cell input sizes do not match the parameters");
    const std::size_t h = p.hidden;
    std::vector<T> gates(3 * h, T(0));
    for (std::size_t j = 0; j < 3 * h; ++j) gates[j] = p.b[j];
    for (std::size_t i = 0; i < p.in; ++i)
        for (std::size_t j = 0; j < 3 * h; ++j) gates[j] += x[i] * p.w[i * 3 * h + j];
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < 2 * h; ++j) gates[j] += h_prev[i] * p.u_zr[i * 2 * h + j];

    std::vector<T> out(h);
    std::vector<T> rh(h);
    for (std::size_t j = 0; j < h; ++j) {
        const T z = detail::sigmoid(gates[j]);
        const T r = detail::sigmoid(gates[h + j]);
        rh[j] = r * h_prev[j];
        out[j] = z;  // stash z; combined below once hc is known
        gates[h + j] = r;
    }
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < h; ++j) gates[2 * h + j] += rh[i] * p.u_h[i * h + j];
    for (std::size_t j = 0; j < h; ++j) {
        const T z = out[j];
        const T hc = std::tanh(gates[2 * h + j]);
        out[j] = (T(1) - z) * h_prev[j] + z * hc;
    }
    return out;
}

template <typename T>
struct LstmCellParams {
    std::vector<T> w;  // F x 4H
    std::vector<T> u;  // H x 4H
    std::vector<T> b;  // 4H
    std::size_t in = 0;
    std::size_t hidden = 0;
};

template <typename T>
struct LstmState {
    std::vector<T> h;
    std::vector<T> c;
};

template <typename T>
inline LstmState<T> lstm_cell(std::span<const T> x, const LstmState<T>& prev,
                              const LstmCellParams<T>& p) {
    if (x.size() != p.in || prev.h.size() != p.hidden || prev.c.size() != p.hidden)
        errors::shape("lstm_cell input sizes do not match the parameters");
    const std::size_t h = p.hidden;
    std::vector<T> a(4 * h);
    for (std::size_t j = 0; j < 4 * h; ++j) a[j] = p.b[j];
    for (std::size_t i = 0; i < p.in; ++i)
        for (std::size_t j = 0; j < 4 * h; ++j) a[j] += x[i] * p.w[i * 4 * h + j];
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < 4 * h; ++j) a[j] += prev.h[i] * p.u[i * 4 * h + j];

    LstmState<T> next;
    next.h.resize(h);
    next.c.resize(h);
    for (std::size_t j = 0; j < h; ++j) {
        const T gi = detail::sigmoid(a[j]);
        const T gf = detail::sigmoid(a[h + j]);
        const T gg = std::tanh(a[2 * h + j]);
        const T go = detail::sigmoid(a[3 * h + j]);
        next.c[j] = gf * prev.c[j] + gi * gg;
        next.h[j] = go * std::tanh(next.c[j]);
    }
    return next;
}

// ---------------------------------------------------------------------------

template <typename T>
class BiGru final : public Layer<T> {
public:
    BiGru(std::size_t hidden, bool return_sequence, double recurrent_dropout = 0.0)
        : hidden_(hidden), return_sequence_(return_sequence), rec_rate_(recurrent_dropout) {
        if (rec_rate_ < 0.0 || rec_rate_ >= 1.0)
            errors::parameter("recurrent dropout rate must be in [0, 1)");
    }

    std::string name() const override {
        return std::string("bigru:") + std::to_string(hidden_) +
               (return_sequence_ ? ":seq" : ":final");
    }

    std::size_t param_count() const override { return 2 * per_direction(); }

    Shape output_shape(const Shape& in) const override {
        if (in.rank != 3) errors::shape("bigru expects rank-3 input");
        if (in.dims[1] == 0) errors::parameter("bigru needs a non-empty sequence");
        in_ = in.dims[2];
        return return_sequence_ ? Shape::of(in.dims[0], in.dims[1], 2 * hidden_)
                                : Shape::of(in.dims[0], 2 * hidden_);
    }

    void init_params(std::span<T> params, rng::Xoshiro256pp& gen) override {
        for (int dir = 0; dir < 2; ++dir) {
            std::span<T> p = params.subspan(static_cast<std::size_t>(dir) * per_direction());
            glorot_fill(p.subspan(0, in_ * 3 * hidden_), in_, hidden_, gen);
            glorot_fill(p.subspan(in_ * 3 * hidden_, 3 * hidden_ * hidden_), hidden_, hidden_, gen);
            std::fill_n(p.data() + in_ * 3 * hidden_ + 3 * hidden_ * hidden_, 3 * hidden_, T(0));
        }
    }

    Tensor<T> forward(const Tensor<T>& x, std::span<const T> params, bool training,
                      rng::Xoshiro256pp* drop_rng) override {
        x_ = x;
        const std::size_t batch = x.shape.dims[0];
        const std::size_t steps = x.shape.dims[1];
        Tensor<T> y(return_sequence_ ? Shape::of(batch, steps, 2 * hidden_)
                                     : Shape::of(batch, 2 * hidden_));
        for (int dir = 0; dir < 2; ++dir)
            run_direction(dir, x, params, training, drop_rng, y);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, std::span<const T> params, std::span<T> grad) override {
        Tensor<T> dx(x_.shape);
        for (int dir = 0; dir < 2; ++dir) back_direction(dir, dy, params, grad, dx);
        return dx;
    }

private:
    std::size_t per_direction() const { return 3 * in_ * hidden_ + 3 * hidden_ * hidden_ + 3 * hidden_; }

    struct DirCache {
        // Flat per-step caches, stride batch*hidden.
        std::vector<T> h_prev, mh, z, r, hc, rh;
        std::vector<T> rec_mask;  // batch*hidden; empty when inactive
    };

    void run_direction(int dir, const Tensor<T>& x, std::span<const T> params, bool training,
                       rng::Xoshiro256pp* drop_rng, Tensor<T>& y) {
        const std::size_t batch = x.shape.dims[0];
        const std::size_t steps = x.shape.dims[1];
        const std::size_t bh = batch * hidden_;
        const std::size_t h3 = 3 * hidden_;
        const T* w = params.data() + static_cast<std::size_t>(dir) * per_direction();
        const T* u_zr = w + in_ * h3;
        const T* u_h = u_zr + 2 * hidden_ * hidden_;
        const T* bias = u_h + hidden_ * hidden_;

        DirCache& cache = cache_[dir];
        cache.h_prev.assign(steps * bh, T(0));
        cache.mh.assign(steps * bh, T(0));
        cache.z.assign(steps * bh, T(0));
        cache.r.assign(steps * bh, T(0));
        cache.hc.assign(steps * bh, T(0));
        cache.rh.assign(steps * bh, T(0));
        cache.rec_mask.clear();
        if (training && rec_rate_ > 0.0 && drop_rng != nullptr) {
            cache.rec_mask.resize(bh);
            const T scale = T(1.0 / (1.0 - rec_rate_));
            for (T& m : cache.rec_mask)
                m = drop_rng->uniform01() >= rec_rate_ ? scale : T(0);
        }

        std::vector<T> h(bh, T(0));
        std::vector<T> gates(batch * h3);
        for (std::size_t s = 0; s < steps; ++s) {
            const std::size_t t = dir == 0 ? s : steps - 1 - s;
            const T* xt = x.data.data() + t * in_;  // row stride steps*in_
            T* hp = cache.h_prev.data() + s * bh;
            T* mh = cache.mh.data() + s * bh;
            std::copy(h.begin(), h.end(), hp);
            if (!cache.rec_mask.empty()) {
                for (std::size_t i = 0; i < bh; ++i) mh[i] = h[i] * cache.rec_mask[i];
            } else {
                std::copy(h.begin(), h.end(), mh);
            }

            for (std::size_t b = 0; b < batch; ++b)
                std::copy_n(bias, h3, gates.data() + b * h3);
            // x_t rows live strided inside the (batch, steps, in) tensor.
            for (std::size_t b = 0; b < batch; ++b)
                gemm_nn(std::size_t(1), h3, in_, xt + b * steps * in_, in_, w, h3,
                        gates.data() + b * h3, h3);
            gemm_nn(batch, 2 * hidden_, hidden_, mh, hidden_, u_zr, 2 * hidden_, gates.data(), h3);

            T* zs = cache.z.data() + s * bh;
            T* rs = cache.r.data() + s * bh;
            T* rhs = cache.rh.data() + s * bh;
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t j = 0; j < hidden_; ++j) {
                    const std::size_t i = b * hidden_ + j;
                    zs[i] = detail::sigmoid(gates[b * h3 + j]);
                    rs[i] = detail::sigmoid(gates[b * h3 + hidden_ + j]);
                    rhs[i] = rs[i] * mh[i];
                }
            gemm_nn(batch, hidden_, hidden_, rhs, hidden_, u_h, hidden_,
                    gates.data() + 2 * hidden_, h3);

            T* hcs = cache.hc.data() + s * bh;
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t j = 0; j < hidden_; ++j) {
                    const std::size_t i = b * hidden_ + j;
                    hcs[i] = std::tanh(gates[b * h3 + 2 * hidden_ + j]);
                    h[i] = (T(1) - zs[i]) * hp[i] + zs[i] * hcs[i];
                }

            if (return_sequence_) {
                for (std::size_t b = 0; b < batch; ++b)
                    std::copy_n(h.data() + b * hidden_, hidden_,
                                y.data.data() + (b * steps + t) * 2 * hidden_ +
                                    static_cast<std::size_t>(dir) * hidden_);
            }
        }
        if (!return_sequence_) {
            for (std::size_t b = 0; b < batch; ++b)
                std::copy_n(h.data() + b * hidden_, hidden_,
                            y.data.data() + b * 2 * hidden_ + static_cast<std::size_t>(dir) * hidden_);
        }
    }

    void back_direction(int dir, const Tensor<T>& dy, std::span<const T> params, std::span<T> grad,
                        Tensor<T>& dx) {
        const std::size_t batch = x_.shape.dims[0];
        const std::size_t steps = x_.shape.dims[1];
        const std::size_t bh = batch * hidden_;
        const std::size_t h3 = 3 * hidden_;
        const std::size_t off = static_cast<std::size_t>(dir) * per_direction();
        const T* w = params.data() + off;
        const T* u_zr = w + in_ * h3;
        const T* u_h = u_zr + 2 * hidden_ * hidden_;
        T* dw = grad.data() + off;
        T* du_zr = dw + in_ * h3;
        T* du_h = du_zr + 2 * hidden_ * hidden_;
        T* db = du_h + hidden_ * hidden_;

        const DirCache& cache = cache_[dir];
        std::vector<T> dh(bh, T(0));
        std::vector<T> da(batch * h3);
        std::vector<T> dmh(bh), drh(bh);

        for (std::size_t s = steps; s-- > 0;) {
            const std::size_t t = dir == 0 ? s : steps - 1 - s;
            if (return_sequence_) {
                for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t j = 0; j < hidden_; ++j)
                        dh[b * hidden_ + j] +=
                            dy.data[(b * steps + t) * 2 * hidden_ +
                                    static_cast<std::size_t>(dir) * hidden_ + j];
            } else if (s == steps - 1) {
                for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t j = 0; j < hidden_; ++j)
                        dh[b * hidden_ + j] =
                            dy.data[b * 2 * hidden_ + static_cast<std::size_t>(dir) * hidden_ + j];
            }

            const T* hp = cache.h_prev.data() + s * bh;
            const T* mh = cache.mh.data() + s * bh;
            const T* zs = cache.z.data() + s * bh;
            const T* rs = cache.r.data() + s * bh;
            const T* hcs = cache.hc.data() + s * bh;
            const T* rhs = cache.rh.data() + s * bh;

            std::fill(drh.begin(), drh.end(), T(0));
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t j = 0; j < hidden_; ++j) {
                    const std::size_t i = b * hidden_ + j;
                    const T dhc = dh[i] * zs[i];
                    const T dz = dh[i] * (hcs[i] - hp[i]);
                    const T da_h = dhc * (T(1) - hcs[i] * hcs[i]);
                    da[b * h3 + 2 * hidden_ + j] = da_h;
                    da[b * h3 + j] = dz * zs[i] * (T(1) - zs[i]);
                    dh[i] = dh[i] * (T(1) - zs[i]);  // becomes dh_prev
                }
            // drh = da_h U_h^T ; dr = drh * mh ; dmh starts as drh * r.
            for (std::size_t b = 0; b < batch; ++b)
                gemm_nt(std::size_t(1), hidden_, hidden_, da.data() + b * h3 + 2 * hidden_, h3, u_h,
                        hidden_, drh.data() + b * hidden_, hidden_);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t j = 0; j < hidden_; ++j) {
                    const std::size_t i = b * hidden_ + j;
                    const T dr = drh[i] * mh[i];
                    dmh[i] = drh[i] * rs[i];
                    da[b * h3 + hidden_ + j] = dr * rs[i] * (T(1) - rs[i]);
                }
            // dmh += da_zr U_zr^T.
            for (std::size_t b = 0; b < batch; ++b)
                gemm_nt(std::size_t(1), hidden_, 2 * hidden_, da.data() + b * h3, h3, u_zr,
                        2 * hidden_, dmh.data() + b * hidden_, hidden_);

            // Parameter gradients.
            const T* xt = x_.data.data() + t * in_;
            for (std::size_t b = 0; b < batch; ++b)
                gemm_tn(std::size_t(1), h3, in_, xt + b * steps * in_, in_, da.data() + b * h3, h3,
                        dw, h3);
            gemm_tn(batch, 2 * hidden_, hidden_, mh, hidden_, da.data(), h3, du_zr, 2 * hidden_);
            gemm_tn(batch, hidden_, hidden_, rhs, hidden_, da.data() + 2 * hidden_, h3, du_h, hidden_);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t j = 0; j < h3; ++j) db[j] += da[b * h3 + j];

            // Input gradient and the carry into the previous step.
            T* dxt = dx.data.data() + t * in_;
            for (std::size_t b = 0; b < batch; ++b)
                gemm_nt(std::size_t(1), in_, h3, da.data() + b * h3, h3, w, h3,
                        dxt + b * steps * in_, in_);
            if (!cache.rec_mask.empty()) {
                for (std::size_t i = 0; i < bh; ++i) dh[i] += dmh[i] * cache.rec_mask[i];
            } else {
                for (std::size_t i = 0; i < bh; ++i) dh[i] += dmh[i];
            }
        }
    }

    std::size_t hidden_;
    bool return_sequence_;
    double rec_rate_;
    mutable std::size_t in_ = 0;
    Tensor<T> x_;
    DirCache cache_[2];
};

// ---------------------------------------------------------------------------

template <typename T>
class BiLstm final : public Layer<T> {
public:
    BiLstm(std::size_t hidden, bool return_sequence, double recurrent_dropout = 0.0)
        : hidden_(hidden), return_sequence_(return_sequence), rec_rate_(recurrent_dropout) {
        if (rec_rate_ < 0.0 || rec_rate_ >= 1.0)
            errors::parameter("recurrent dropout rate must be in [0, 1)");
    }

    std::string name() const override {
        return std::string("bilstm:") + std::to_string(hidden_) +
               (return_sequence_ ? ":seq" : ":final");
    }

    std::size_t param_count() const override { return 2 * per_direction(); }

    Shape output_shape(const Shape& in) const override {
        if (in.rank != 3) errors::shape("bilstm expects rank-3 input");
        if (in.dims[1] == 0) errors::parameter("bilstm needs a non-empty sequence");
        in_ = in.dims[2];
        return return_sequence_ ? Shape::of(in.dims[0], in.dims[1], 2 * hidden_)
                                : Shape::of(in.dims[0], 2 * hidden_);
    }

    void init_params(std::span<T> params, rng::Xoshiro256pp& gen) override {
        for (int dir = 0; dir < 2; ++dir) {
            std::span<T> p = params.subspan(static_cast<std::size_t>(dir) * per_direction());
            glorot_fill(p.subspan(0, in_ * 4 * hidden_), in_, hidden_, gen);
            glorot_fill(p.subspan(in_ * 4 * hidden_, 4 * hidden_ * hidden_), hidden_, hidden_, gen);
            T* bias = p.data() + in_ * 4 * hidden_ + 4 * hidden_ * hidden_;
            std::fill_n(bias, 4 * hidden_, T(0));
            // Forget-gate bias starts at 1 so memory is retained early in training.
            std::fill_n(bias + hidden_, hidden_, T(1));
        }
    }

    Tensor<T> forward(const Tensor<T>& x, std::span<const T> params, bool training,
                      rng::Xoshiro256pp* drop_rng) override {
        x_ = x;
        const std::size_t batch = x.shape.dims[0];
        const std::size_t steps = x.shape.dims[1];
        Tensor<T> y(return_sequence_ ? Shape::of(batch, steps, 2 * hidden_)
                                     : Shape::of(batch, 2 * hidden_));
        for (int dir = 0; dir < 2; ++dir)
            run_direction(dir, x, params, training, drop_rng, y);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, std::span<const T> params, std::span<T> grad) override {
        Tensor<T> dx(x_.shape);
        for (int dir = 0; dir < 2; ++dir) back_direction(dir, dy, params, grad, dx);
        return dx;
    }

private:
    std::size_t per_direction() const { return 4 * in_ * hidden_ + 4 * hidden_ * hidden_ + 4 * hidden_; }

    struct DirCache {
        std::vector<T> h_prev, c_prev, mh, gi, gf, gg, go, tc;
        std::vector<T> rec_mask;
    };

    void run_direction(int dir, const Tensor<T>& x, std::span<const T> params, bool training,
                       rng::Xoshiro256pp* drop_rng, Tensor<T>& y) {
        const std::size_t batch = x.shape.dims[0];
        const std::size_t steps = x.shape.dims[1];
        const std::size_t bh = batch * hidden_;
        const std::size_t h4 = 4 * hidden_;
        const T* w = params.data() + static_cast<std::size_t>(dir) * per_direction();
        const T* u = w + in_ * h4;
        const T* bias = u + hidden_ * h4;

        DirCache& cache = cache_[dir];
        for (auto* v : {&cache.h_prev, &cache.c_prev, &cache.mh, &cache.gi, &cache.gf, &cache.gg,
                        &cache.go, &cache.tc})
            v->assign(steps * bh, T(0));
        cache.rec_mask.clear();
        if (training && rec_rate_ > 0.0 && drop_rng != nullptr) {
            cache.rec_mask.resize(bh);
            const T scale = T(1.0 / (1.0 - rec_rate_));
            for (T& m : cache.rec_mask)
                m = drop_rng->uniform01() >= rec_rate_ ? scale : T(0);
        }

        std::vector<T> h(bh, T(0)), c(bh, T(0));
        std::vector<T> acts(batch * h4);
        for (std::size_t s = 0; s < steps; ++s) {
            const std::size_t t = dir == 0 ? s : steps - 1 - s;
            const T* xt = x.data.data() + t * in_;
            T* hp = cache.h_prev.data() + s * bh;
            T* cp = cache.c_prev.data() + s * bh;
            T* mh = cache.mh.data() + s * bh;
            std::copy(h.begin(), h.end(), hp);
            std::copy(c.begin(), c.end(), cp);
            if (!cache.rec_mask.empty()) {
                for (std::size_t i = 0; i < bh; ++i) mh[i] = h[i] * cache.rec_mask[i];
            } else {
                std::copy(h.begin(), h.end(), mh);
            }

            for (std::size_t b = 0; b < batch; ++b)
                std::copy_n(bias, h4, acts.data() + b * h4);
            for (std::size_t b = 0; b < batch; ++b)
                gemm_nn(std::size_t(1), h4, in_, xt + b * steps * in_, in_, w, h4,
                        acts.data() + b * h4, h4);
            gemm_nn(batch, h4, hidden_, mh, hidden_, u, h4, acts.data(), h4);

            T* gi = cache.gi.data() + s * bh;
            T* gf = cache.gf.data() + s * bh;
            T* gg = cache.gg.data() + s * bh;
            T* go = cache.go.data() + s * bh;
            T* tc = cache.tc.data() + s * bh;
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t j = 0; j < hidden_; ++j) {
                    const std::size_t i = b * hidden_ + j;
                    gi[i] = detail::sigmoid(acts[b * h4 + j]);
                    gf[i] = detail::sigmoid(acts[b * h4 + hidden_ + j]);
                    gg[i] = std::tanh(acts[b * h4 + 2 * hidden_ + j]);
                    go[i] = detail::sigmoid(acts[b * h4 + 3 * hidden_ + j]);
                    c[i] = gf[i] * cp[i] + gi[i] * gg[i];
                    tc[i] = std::tanh(c[i]);
                    h[i] = go[i] * tc[i];
                }

            if (return_sequence_) {
                for (std::size_t b = 0; b < batch; ++b)
                    std::copy_n(h.data() + b * hidden_, hidden_,
                                y.data.data() + (b * steps + t) * 2 * hidden_ +
                                    static_cast<std::size_t>(dir) * hidden_);
            }
        }
        if (!return_sequence_) {
            for (std::size_t b = 0; b < batch; ++b)
                std::copy_n(h.data() + b * hidden_, hidden_,
                            y.data.data() + b * 2 * hidden_ + static_cast<std::size_t>(dir) * hidden_);
        }
    }

    void back_direction(int dir, const Tensor<T>& dy, std::span<const T> params, std::span<T> grad,
                        Tensor<T>& dx) {
        const std::size_t batch = x_.shape.dims[0];
        const std::size_t steps = x_.shape.dims[1];
        const std::size_t bh = batch * hidden_;
        const std::size_t h4 = 4 * hidden_;
        const std::size_t off = static_cast<std::size_t>(dir) * per_direction();
        const T* w = params.data() + off;
        const T* u = w + in_ * h4;
        T* dw = grad.data() + off;
        T* du = dw + in_ * h4;
        T* db = du + hidden_ * h4;

        const DirCache& cache = cache_[dir];
        std::vector<T> dh(bh, T(0)), dc(bh, T(0));
        std::vector<T> da(batch * h4);
        std::vector<T> dmh(bh);

        for (std::size_t s = steps; s-- > 0;) {
            const std::size_t t = dir == 0 ? s : steps - 1 - s;
            if (return_sequence_) {
                for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t j = 0; j < hidden_; ++j)
                        dh[b * hidden_ + j] +=
                            dy.data[(b * steps + t) * 2 * hidden_ +
                                    static_cast<std::size_t>(dir) * hidden_ + j];
            } else if (s == steps - 1) {
                for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t j = 0; j < hidden_; ++j)
                        dh[b * hidden_ + j] =
                            dy.data[b * 2 * hidden_ + static_cast<std::size_t>(dir) * hidden_ + j];
            }

            const T* hp = cache.h_prev.data() + s * bh;
            const T* cp = cache.c_prev.data() + s * bh;
            const T* mh = cache.mh.data() + s * bh;
            const T* gi = cache.gi.data() + s * bh;
            const T* gf = cache.gf.data() + s * bh;
            const T* gg = cache.gg.data() + s * bh;
            const T* go = cache.go.data() + s * bh;
            const T* tc = cache.tc.data() + s * bh;
            (void)hp;

            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t j = 0; j < hidden_; ++j) {
                    const std::size_t i = b * hidden_ + j;
                    const T dout = dh[i] * tc[i];
                    dc[i] += dh[i] * go[i] * (T(1) - tc[i] * tc[i]);
                    const T di = dc[i] * gg[i];
                    const T df = dc[i] * cp[i];
                    const T dg = dc[i] * gi[i];
                    da[b * h4 + j] = di * gi[i] * (T(1) - gi[i]);
                    da[b * h4 + hidden_ + j] = df * gf[i] * (T(1) - gf[i]);
                    da[b * h4 + 2 * hidden_ + j] = dg * (T(1) - gg[i] * gg[i]);
                    da[b * h4 + 3 * hidden_ + j] = dout * go[i] * (T(1) - go[i]);
                    dc[i] = dc[i] * gf[i];  // carry to the previous step
                }

            const T* xt = x_.data.data() + t * in_;
            for (std::size_t b = 0; b < batch; ++b)
                gemm_tn(std::size_t(1), h4, in_, xt + b * steps * in_, in_, da.data() + b * h4, h4,
                        dw, h4);
            gemm_tn(batch, h4, hidden_, mh, hidden_, da.data(), h4, du, h4);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t j = 0; j < h4; ++j) db[j] += da[b * h4 + j];

            std::fill(dmh.begin(), dmh.end(), T(0));
            gemm_nt(batch, hidden_, h4, da.data(), h4, u, h4, dmh.data(), hidden_);
            T* dxt = dx.data.data() + t * in_;
            for (std::size_t b = 0; b < batch; ++b)
                gemm_nt(std::size_t(1), in_, h4, da.data() + b * h4, h4, w, h4,
                        dxt + b * steps * in_, in_);

            if (!cache.rec_mask.empty()) {
                for (std::size_t i = 0; i < bh; ++i) dh[i] = dmh[i] * cache.rec_mask[i];
            } else {
                std::copy(dmh.begin(), dmh.end(), dh.begin());
            }
        }
    }

    std::size_t hidden_;
    bool return_sequence_;
    double rec_rate_;
    mutable std::size_t in_ = 0;
    Tensor<T> x_;
    DirCache cache_[2];
};

}  // namespace rffp::nn
