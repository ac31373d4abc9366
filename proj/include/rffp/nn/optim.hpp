#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "rffp/errors.hpp"

// Adam and RMSProp parameter updates over flat parameter/gradient vectors.

namespace rffp::nn {

template <typename T>
struct AdamState {
    std::vector<T> m;
    std::vector<T> v;
    long step = 0;

    explicit AdamState(std::size_t n) : m(n, T(0)), v(n, T(0)) {}
};

// Bias-corrected Adam. Non-finite gradients abort training.
template <typename T>
inline void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, T lr,
                      T beta1 = T(0.9), T beta2 = T(0.999), T eps = T(1e-8)) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        errors::shape("adam_step size mismatch");
    ++state.step;
    const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta1), state.step));
    const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta2), state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const T g = grads[i];
        if (!std::isfinite(static_cast<double>(g)))
            errors::training_diverged("non-finite gradient in adam_step");
        state.m[i] = beta1 * state.m[i] + (T(1) - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (T(1) - beta2) * g * g;
        const T mhat = state.m[i] / bc1;
        const T vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

template <typename T>
struct RmsPropState {
    std::vector<T> v;

    explicit RmsPropState(std::size_t n) : v(n, T(0)) {}
};

// v <- rho v + (1 - rho) g^2 ; theta <- theta - lr g / (sqrt(v) + eps).
template <typename T>
inline void rmsprop_step(std::span<T> params, std::span<const T> grads, RmsPropState<T>& state,
                         T lr, T rho = T(0.9), T eps = T(1e-8)) {
    if (params.size() != grads.size() || params.size() != state.v.size())
        errors::shape("rmsprop_step size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const T g = grads[i];
        if (!std::isfinite(static_cast<double>(g)))
            errors::training_diverged("non-finite gradient in rmsprop_step");
        state.v[i] = rho * state.v[i] + (T(1) - rho) * g * g;
        params[i] -= lr * g / (std::sqrt(state.v[i]) + eps);
    }
}

}  // namespace rffp::nn
