#pragma once

#include <cmath>

#include "mieval/nn/tensor.hpp"

namespace mieval::nn {

/// Scalar loss plus its gradient w.r.t. the predicted probabilities.
template <typename T>
struct LossGrad {
    T value = 0;
    Tensor<T> grad;
};

/// Soft Dice loss over softmax probabilities. Per class c the score is
/// (2*sum(p*g) + eps) / (sum(p) + sum(g) + eps) with eps = 1, sums taken over
/// the whole batch; the loss is 1 minus the class mean. Background is part of
/// the mean by default.
template <typename T>
LossGrad<T> dice_loss(const Tensor<T>& probs, const Tensor<T>& target,
                      bool include_background = true) {
    require_same_shape(probs, target, "dice_loss");
    constexpr T kSmooth = T(1);
    const int c0 = include_background ? 0 : 1;
    const int classes = probs.c - c0;
    if (classes < 1) throw ShapeError("dice_loss: no classes left to average");

    LossGrad<T> out;
    out.grad = Tensor<T>(probs.n, probs.c, probs.h, probs.w);
    const std::size_t hw = static_cast<std::size_t>(probs.h) * probs.w;

    T mean_dice = 0;
    for (int j = c0; j < probs.c; ++j) {
        T inter = 0, psum = 0, gsum = 0;
        for (int i = 0; i < probs.n; ++i) {
            const T* p = probs.v.data() + probs.index(i, j, 0, 0);
            const T* g = target.v.data() + target.index(i, j, 0, 0);
            for (std::size_t k = 0; k < hw; ++k) {
                inter += p[k] * g[k];
                psum += p[k];
                gsum += g[k];
            }
        }
        const T num = T(2) * inter + kSmooth;
        const T den = psum + gsum + kSmooth;
        mean_dice += num / den;
        // d(num/den)/dp = (2*g*den - num) / den^2
        const T inv_den2 = T(1) / (den * den);
        for (int i = 0; i < probs.n; ++i) {
            const T* g = target.v.data() + target.index(i, j, 0, 0);
            T* gr = out.grad.v.data() + out.grad.index(i, j, 0, 0);
            for (std::size_t k = 0; k < hw; ++k) {
                gr[k] = -(T(2) * g[k] * den - num) * inv_den2 / static_cast<T>(classes);
            }
        }
    }
    out.value = T(1) - mean_dice / static_cast<T>(classes);
    return out;
}

/// Cross entropy against one-hot targets: mean over pixels of
/// -sum_c g * log(max(p, 1e-7)).
template <typename T>
LossGrad<T> cross_entropy_loss(const Tensor<T>& probs, const Tensor<T>& target) {
    require_same_shape(probs, target, "cross_entropy_loss");
    constexpr T kClamp = T(1e-7);
    const std::size_t pixels =
        static_cast<std::size_t>(probs.n) * probs.h * probs.w;

    LossGrad<T> out;
    out.grad = Tensor<T>(probs.n, probs.c, probs.h, probs.w);
    T total = 0;
    for (std::size_t i = 0; i < probs.v.size(); ++i) {
        const T g = target.v[i];
        if (g == T(0)) continue;
        const T p = probs.v[i];
        if (p < kClamp) {
            total -= g * std::log(kClamp);
            // clamped region: d/dp log(max(p, clamp)) = 0
        } else {
            total -= g * std::log(p);
            out.grad.v[i] = -g / p / static_cast<T>(pixels);
        }
    }
    out.value = total / static_cast<T>(pixels);
    return out;
}

/// The training objective: the average of Dice and cross-entropy losses.
template <typename T>
LossGrad<T> combined_loss(const Tensor<T>& probs, const Tensor<T>& target,
                          bool include_background = true) {
    LossGrad<T> dice = dice_loss(probs, target, include_background);
    LossGrad<T> ce = cross_entropy_loss(probs, target);
    LossGrad<T> out;
    out.value = (dice.value + ce.value) / T(2);
    out.grad = std::move(dice.grad);
    for (std::size_t i = 0; i < out.grad.v.size(); ++i) {
        out.grad.v[i] = (out.grad.v[i] + ce.grad.v[i]) / T(2);
    }
    return out;
}

/// One-hot encoding of a class-index slice into (1, K, H, W).
template <typename T>
Tensor<T> one_hot(const std::vector<std::uint8_t>& classes, int num_classes, int h,
                  int w) {
    if (classes.size() != static_cast<std::size_t>(h) * w) {
        throw ShapeError("one_hot: class grid size mismatch");
    }
    Tensor<T> t(1, num_classes, h, w);
    for (std::size_t k = 0; k < classes.size(); ++k) {
        if (classes[k] >= num_classes) {
            throw ShapeError("one_hot: class id out of range");
        }
        t.v[static_cast<std::size_t>(classes[k]) * classes.size() + k] = T(1);
    }
    return t;
}

}  // namespace mieval::nn
