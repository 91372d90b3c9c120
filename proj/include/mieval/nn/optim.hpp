#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mieval/nn/layers.hpp"
#include "mieval/rng.hpp"

namespace mieval::nn {

/// He initialization: normal(0, sqrt(2 / fan_in)). Biases stay zero.
template <typename T>
void he_init(Tensor<T>& w, int fan_in, Rng& rng) {
    if (fan_in < 1) throw ShapeError("he_init: fan_in must be >= 1");
    const double stddev = std::sqrt(2.0 / fan_in);
    for (T& v : w.v) v = static_cast<T>(rng.normal(0.0, stddev));
}

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-7;
};

/// Per-parameter first/second moment accumulators plus the shared step count.
template <typename T>
struct AdamState {
    AdamConfig cfg;
    std::int64_t t = 0;
    std::vector<std::vector<T>> m, v;

    void init(std::span<const ParamRef<T>> params) {
        m.clear();
        v.clear();
        for (const auto& p : params) {
            m.emplace_back(p.value->size(), T(0));
            v.emplace_back(p.value->size(), T(0));
        }
        t = 0;
    }
};

/// Bias-corrected ADAM update over the registered parameters; gradients are
/// left untouched (the caller zeroes them per step).
template <typename T>
void adam_step(std::span<const ParamRef<T>> params, AdamState<T>& st) {
    if (st.m.size() != params.size()) {
        throw ShapeError("adam_step: state/params size mismatch");
    }
    ++st.t;
    const T b1 = static_cast<T>(st.cfg.beta1);
    const T b2 = static_cast<T>(st.cfg.beta2);
    const T corr1 = T(1) - static_cast<T>(std::pow(st.cfg.beta1, st.t));
    const T corr2 = T(1) - static_cast<T>(std::pow(st.cfg.beta2, st.t));
    const T lr = static_cast<T>(st.cfg.lr);
    const T eps = static_cast<T>(st.cfg.eps);

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& value = params[pi].value->v;
        const auto& grad = params[pi].grad->v;
        auto& m = st.m[pi];
        auto& v = st.v[pi];
        if (value.size() != grad.size() || value.size() != m.size()) {
            throw ShapeError("adam_step: tensor size mismatch for " + params[pi].name);
        }
        for (std::size_t k = 0; k < value.size(); ++k) {
            m[k] = b1 * m[k] + (T(1) - b1) * grad[k];
            v[k] = b2 * v[k] + (T(1) - b2) * grad[k] * grad[k];
            const T mhat = m[k] / corr1;
            const T vhat = v[k] / corr2;
            value[k] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

template <typename T>
void zero_grads(std::span<const ParamRef<T>> params) {
    for (const auto& p : params) p.grad->fill(T(0));
}

}  // namespace mieval::nn
