#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>

#include "rffp/errors.hpp"
#include "rffp/nn/tensor.hpp"
#include "rffp/rng.hpp"

// Feed-forward layers. Each layer owns the activation caches its backward pass
// needs, so a model instance must not be shared across concurrent training
// threads; train one instance per thread instead.

namespace rffp::nn {

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string name() const = 0;
    virtual std::size_t param_count() const { return 0; }
    virtual Shape output_shape(const Shape& in) const = 0;
    virtual void init_params(std::span<T> /*params*/, rng::Xoshiro256pp& /*gen*/) {}
    virtual Tensor<T> forward(const Tensor<T>& x, std::span<const T> params, bool training,
                              rng::Xoshiro256pp* drop_rng) = 0;
    // grad_params aliases the model's gradient buffer; implementations accumulate.
    virtual Tensor<T> backward(const Tensor<T>& dy, std::span<const T> params,
                               std::span<T> grad_params) = 0;
};

// Glorot-style fan-scaled uniform initialization.
template <typename T>
inline void glorot_fill(std::span<T> w, std::size_t fan_in, std::size_t fan_out,
                        rng::Xoshiro256pp& gen) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (T& v : w) v = static_cast<T>(gen.uniform(-limit, limit));
}

template <typename T>
class Dense final : public Layer<T> {
public:
    explicit Dense(std::size_t units) : units_(units) {}

    std::string name() const override { return "dense:" + std::to_string(units_); }
    std::size_t param_count() const override { return in_ * units_ + units_; }

    Shape output_shape(const Shape& in) const override {
        if (in.rank != 2) errors::shape("dense expects rank-2 input");
        in_ = in.dims[1];
        return Shape::of(in.dims[0], units_);
    }

    void init_params(std::span<T> params, rng::Xoshiro256pp& gen) override {
        glorot_fill(params.subspan(0, in_ * units_), in_, units_, gen);
        std::fill_n(params.data() + in_ * units_, units_, T(0));
    }

    Tensor<T> forward(const Tensor<T>& x, std::span<const T> params, bool, rng::Xoshiro256pp*) override {
        x_ = x;
        const std::size_t batch = x.shape.dims[0];
        Tensor<T> y(Shape::of(batch, units_));
        const T* bias = params.data() + in_ * units_;
        for (std::size_t i = 0; i < batch; ++i)
            std::copy_n(bias, units_, y.data.data() + i * units_);
        gemm_nn(batch, units_, in_, x.data.data(), in_, params.data(), units_, y.data.data(), units_);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, std::span<const T> params, std::span<T> grad) override {
        const std::size_t batch = dy.shape.dims[0];
        // dW += x^T dy ; db += column sums ; dx = dy W^T
        gemm_tn(batch, units_, in_, x_.data.data(), in_, dy.data.data(), units_, grad.data(), units_);
        T* db = grad.data() + in_ * units_;
        for (std::size_t i = 0; i < batch; ++i)
            for (std::size_t j = 0; j < units_; ++j) db[j] += dy.at(i, j);
        Tensor<T> dx(Shape::of(batch, in_));
        gemm_nt(batch, in_, units_, dy.data.data(), units_, params.data(), units_, dx.data.data(), in_);
        return dx;
    }

private:
    std::size_t units_;
    mutable std::size_t in_ = 0;
    Tensor<T> x_;
};

template <typename T>
class ReLU final : public Layer<T> {
public:
    std::string name() const override { return "relu"; }
    Shape output_shape(const Shape& in) const override { return in; }

    Tensor<T> forward(const Tensor<T>& x, std::span<const T>, bool, rng::Xoshiro256pp*) override {
        Tensor<T> y = x;
        mask_.assign(x.numel(), 0);
        for (std::size_t i = 0; i < y.numel(); ++i) {
            if (y.data[i] > T(0)) {
                mask_[i] = 1;
            } else {
                y.data[i] = T(0);
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, std::span<const T>, std::span<T>) override {
        Tensor<T> dx = dy;
        for (std::size_t i = 0; i < dx.numel(); ++i)
            if (!mask_[i]) dx.data[i] = T(0);
        return dx;
    }

private:
    std::vector<unsigned char> mask_;
};

// Valid (no padding) 1-D convolution over (batch, steps, channels).
template <typename T>
class Conv1D final : public Layer<T> {
public:
    Conv1D(std::size_t kernel, std::size_t out_channels)
        : kernel_(kernel), out_ch_(out_channels) {}

    std::string name() const override {
        return "conv1d:k" + std::to_string(kernel_) + "x" + std::to_string(out_ch_);
    }
    std::size_t param_count() const override { return kernel_ * in_ch_ * out_ch_ + out_ch_; }

    Shape output_shape(const Shape& in) const override {
        if (in.rank != 3) errors::shape("conv1d expects rank-3 input");
        if (in.dims[1] < kernel_) errors::shape("conv1d kernel longer than the sequence");
        in_ch_ = in.dims[2];
        return Shape::of(in.dims[0], in.dims[1] - kernel_ + 1, out_ch_);
    }

    void init_params(std::span<T> params, rng::Xoshiro256pp& gen) override {
        glorot_fill(params.subspan(0, kernel_ * in_ch_ * out_ch_), kernel_ * in_ch_,
                    kernel_ * out_ch_, gen);
        std::fill_n(params.data() + kernel_ * in_ch_ * out_ch_, out_ch_, T(0));
    }

    Tensor<T> forward(const Tensor<T>& x, std::span<const T> params, bool, rng::Xoshiro256pp*) override {
        x_ = x;
        const std::size_t batch = x.shape.dims[0];
        const std::size_t steps_out = x.shape.dims[1] - kernel_ + 1;
        Tensor<T> y(Shape::of(batch, steps_out, out_ch_));
        const T* bias = params.data() + kernel_ * in_ch_ * out_ch_;
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t t = 0; t < steps_out; ++t)
                std::copy_n(bias, out_ch_, y.data.data() + (b * steps_out + t) * out_ch_);
        // One GEMM per (batch item, kernel tap): the tap-shifted slice of the
        // input is a contiguous (steps_out x in_ch) block.
        for (std::size_t b = 0; b < batch; ++b) {
            const T* xb = x.data.data() + b * x.shape.dims[1] * in_ch_;
            T* yb = y.data.data() + b * steps_out * out_ch_;
            for (std::size_t tap = 0; tap < kernel_; ++tap) {
                const T* k = params.data() + tap * in_ch_ * out_ch_;
                gemm_nn(steps_out, out_ch_, in_ch_, xb + tap * in_ch_, in_ch_, k, out_ch_, yb, out_ch_);
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, std::span<const T> params, std::span<T> grad) override {
        const std::size_t batch = dy.shape.dims[0];
        const std::size_t steps_out = dy.shape.dims[1];
        Tensor<T> dx(x_.shape);
        T* dbias = grad.data() + kernel_ * in_ch_ * out_ch_;
        for (std::size_t b = 0; b < batch; ++b) {
            const T* dyb = dy.data.data() + b * steps_out * out_ch_;
            const T* xb = x_.data.data() + b * x_.shape.dims[1] * in_ch_;
            T* dxb = dx.data.data() + b * x_.shape.dims[1] * in_ch_;
            for (std::size_t tap = 0; tap < kernel_; ++tap) {
                gemm_tn(steps_out, out_ch_, in_ch_, xb + tap * in_ch_, in_ch_, dyb, out_ch_,
                        grad.data() + tap * in_ch_ * out_ch_, out_ch_);
                gemm_nt(steps_out, in_ch_, out_ch_, dyb, out_ch_,
                        params.data() + tap * in_ch_ * out_ch_, out_ch_, dxb + tap * in_ch_, in_ch_);
            }
            for (std::size_t t = 0; t < steps_out; ++t)
                for (std::size_t o = 0; o < out_ch_; ++o) dbias[o] += dyb[t * out_ch_ + o];
        }
        return dx;
    }

private:
    std::size_t kernel_;
    std::size_t out_ch_;
    mutable std::size_t in_ch_ = 0;
    Tensor<T> x_;
};

// Non-overlapping max pooling of width 2 along the step axis.
template <typename T>
class MaxPool2 final : public Layer<T> {
public:
    std::string name() const override { return "maxpool2"; }

    Shape output_shape(const Shape& in) const override {
        if (in.rank != 3) errors::shape("maxpool expects rank-3 input");
        if (in.dims[1] < 2) errors::shape("maxpool needs at least 2 steps");
        return Shape::of(in.dims[0], in.dims[1] / 2, in.dims[2]);
    }

    Tensor<T> forward(const Tensor<T>& x, std::span<const T>, bool, rng::Xoshiro256pp*) override {
        in_shape_ = x.shape;
        const std::size_t batch = x.shape.dims[0];
        const std::size_t steps_out = x.shape.dims[1] / 2;
        const std::size_t ch = x.shape.dims[2];
        Tensor<T> y(Shape::of(batch, steps_out, ch));
        argmax_.assign(y.numel(), 0);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t t = 0; t < steps_out; ++t)
                for (std::size_t c = 0; c < ch; ++c) {
                    const T first = x.at(b, 2 * t, c);
                    const T second = x.at(b, 2 * t + 1, c);
                    const bool take_second = second > first;  // first wins ties
                    y.at(b, t, c) = take_second ? second : first;
                    argmax_[(b * steps_out + t) * ch + c] = take_second ? 1 : 0;
                }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, std::span<const T>, std::span<T>) override {
        Tensor<T> dx(in_shape_);
        const std::size_t batch = dy.shape.dims[0];
        const std::size_t steps_out = dy.shape.dims[1];
        const std::size_t ch = dy.shape.dims[2];
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t t = 0; t < steps_out; ++t)
                for (std::size_t c = 0; c < ch; ++c)
                    dx.at(b, 2 * t + argmax_[(b * steps_out + t) * ch + c], c) = dy.at(b, t, c);
        return dx;
    }

private:
    Shape in_shape_;
    std::vector<unsigned char> argmax_;
};

template <typename T>
class Flatten final : public Layer<T> {
public:
    std::string name() const override { return "flatten"; }
    Shape output_shape(const Shape& in) const override {
        if (in.rank != 3) errors::shape("flatten expects rank-3 input");
        return Shape::of(in.dims[0], in.dims[1] * in.dims[2]);
    }
    Tensor<T> forward(const Tensor<T>& x, std::span<const T>, bool, rng::Xoshiro256pp*) override {
        in_shape_ = x.shape;
        return x.reshaped(output_shape(x.shape));
    }
    Tensor<T> backward(const Tensor<T>& dy, std::span<const T>, std::span<T>) override {
        return dy.reshaped(in_shape_);
    }

private:
    Shape in_shape_;
};

// (batch, steps*features) <-> (batch, steps, features); row-major data is
// unchanged, only the shape metadata moves.
template <typename T>
class Reshape final : public Layer<T> {
public:
    Reshape(std::size_t steps, std::size_t features) : steps_(steps), features_(features) {}
    std::string name() const override {
        return "reshape:" + std::to_string(steps_) + "x" + std::to_string(features_);
    }
    Shape output_shape(const Shape& in) const override {
        if (in.rank != 2 || in.dims[1] != steps_ * features_)
            errors::shape("reshape target does not match input width");
        return Shape::of(in.dims[0], steps_, features_);
    }
    Tensor<T> forward(const Tensor<T>& x, std::span<const T>, bool, rng::Xoshiro256pp*) override {
        return x.reshaped(output_shape(x.shape));
    }
    Tensor<T> backward(const Tensor<T>& dy, std::span<const T>, std::span<T>) override {
        return dy.reshaped(Shape::of(dy.shape.dims[0], steps_ * features_));
    }

private:
    std::size_t steps_;
    std::size_t features_;
};

// Inverted dropout: kept units are scaled by 1/(1-rate) during training; eval
// mode is the identity.
template <typename T>
class Dropout final : public Layer<T> {
public:
    explicit Dropout(double rate) : rate_(rate) {
        if (rate < 0.0 || rate >= 1.0) errors::parameter("dropout rate must be in [0, 1)");
    }
    std::string name() const override { return "dropout:" + std::to_string(rate_); }
    Shape output_shape(const Shape& in) const override { return in; }

    Tensor<T> forward(const Tensor<T>& x, std::span<const T>, bool training,
                      rng::Xoshiro256pp* drop_rng) override {
        if (!training || rate_ == 0.0 || drop_rng == nullptr) {
            active_ = false;
            return x;
        }
        active_ = true;
        const T scale = T(1.0 / (1.0 - rate_));
        mask_.assign(x.numel(), T(0));
        Tensor<T> y = x;
        for (std::size_t i = 0; i < y.numel(); ++i) {
            if (drop_rng->uniform01() >= rate_) {
                mask_[i] = scale;
                y.data[i] *= scale;
            } else {
                y.data[i] = T(0);
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, std::span<const T>, std::span<T>) override {
        if (!active_) return dy;
        Tensor<T> dx = dy;
        for (std::size_t i = 0; i < dx.numel(); ++i) dx.data[i] *= mask_[i];
        return dx;
    }

private:
    double rate_;
    bool active_ = false;
    std::vector<T> mask_;
};

}  // namespace rffp::nn
