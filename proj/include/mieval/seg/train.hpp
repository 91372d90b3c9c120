#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "mieval/nn/losses.hpp"
#include "mieval/seg/unet.hpp"
#include "mieval/volume.hpp"

namespace mieval::seg {

struct TrainConfig {
    int max_epochs = 500;
    double lr = 1e-3;
    int early_stop_patience = 200;
    int batch_size = 8;
    std::uint64_t seed = 0;
    bool dice_include_background = true;

    void validate() const {
        if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
        if (early_stop_patience < 0 || early_stop_patience > max_epochs) {
            throw ConfigError("train: patience must be in [0, max_epochs]");
        }
        if (!(lr > 0.0)) throw ConfigError("train: lr must be > 0");
    }
};

/// One preprocessed case: the image volume and per-voxel targets already
/// mapped into the model's class space.
struct TrainCase {
    Volume image;
    LabelMap target;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_loss = 0.0;
};

namespace detail {

struct SliceRef {
    int case_idx;
    int slice;
};

template <typename T>
void fill_batch(const std::vector<TrainCase>& cases,
                const std::vector<SliceRef>& order, std::size_t first, int batch,
                int num_classes, Tensor<T>& x, Tensor<T>& target) {
    const int h = cases[order[first].case_idx].image.shape().h;
    const int w = cases[order[first].case_idx].image.shape().w;
    x = Tensor<T>(batch, 1, h, w);
    target = Tensor<T>(batch, num_classes, h, w);
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    for (int b = 0; b < batch; ++b) {
        const auto& ref = order[first + b];
        const auto& tc = cases[ref.case_idx];
        const float* src = tc.image.data().data() + hw * ref.slice;
        T* dst = x.v.data() + x.index(b, 0, 0, 0);
        for (std::size_t k = 0; k < hw; ++k) dst[k] = static_cast<T>(src[k]);
        const std::uint8_t* lab = tc.target.labels().data() + hw * ref.slice;
        for (std::size_t k = 0; k < hw; ++k) {
            target.v[target.index(b, lab[k], 0, 0) + k] = T(1);
        }
    }
}

template <typename T>
std::vector<std::vector<T>> snapshot(UNet<T>& net) {
    std::vector<std::vector<T>> out;
    for (const auto& p : net.params()) out.push_back(p.value->v);
    for (const auto& b : net.buffers()) out.push_back(b.value->v);
    return out;
}

template <typename T>
void restore(UNet<T>& net, const std::vector<std::vector<T>>& snap) {
    std::size_t i = 0;
    for (const auto& p : net.params()) p.value->v = snap[i++];
    for (const auto& b : net.buffers()) b.value->v = snap[i++];
}

}  // namespace detail

/// Average combined loss over a case set (inference mode; no state updates).
template <typename T>
double evaluate_loss(UNet<T>& net, const std::vector<TrainCase>& cases,
                     const TrainConfig& cfg) {
    std::vector<detail::SliceRef> order;
    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        for (int s = 0; s < cases[ci].image.shape().s; ++s) {
            order.push_back({static_cast<int>(ci), s});
        }
    }
    double total = 0.0;
    std::size_t count = 0;
    Tensor<T> x, target;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
        const int batch =
            static_cast<int>(std::min<std::size_t>(cfg.batch_size, order.size() - first));
        detail::fill_batch(cases, order, first, batch, net.spec.num_classes, x, target);
        const Tensor<T> probs = net.forward(x, /*train=*/false);
        const auto loss = nn::combined_loss(probs, target, cfg.dice_include_background);
        total += static_cast<double>(loss.value) * batch;
        count += batch;
    }
    return count ? total / static_cast<double>(count) : 0.0;
}

/// Trains with ADAM on the combined Dice + cross-entropy loss, monitoring the
/// validation combined loss. Keeps the parameters (and, when `adam_out` is
/// given, the optimizer state) of the best validation epoch; stops once
/// `early_stop_patience` epochs pass without improvement. Fully deterministic
/// for a fixed seed.
template <typename T>
TrainHistory train_unet(UNet<T>& net, const std::vector<TrainCase>& train_cases,
                        const std::vector<TrainCase>& val_cases, const TrainConfig& cfg,
                        nn::AdamState<T>* adam_out = nullptr) {
    cfg.validate();
    if (train_cases.empty()) throw ConfigError("train: empty training set");
    for (const auto& tc : train_cases) {
        if (tc.image.shape() != tc.target.shape()) {
            throw ShapeError("train: image/target grids differ for case " +
                             tc.image.case_id());
        }
    }

    auto params = net.params();
    nn::AdamState<T> adam;
    adam.cfg.lr = cfg.lr;
    adam.init(std::span<const nn::ParamRef<T>>(params));

    std::vector<detail::SliceRef> order;
    for (std::size_t ci = 0; ci < train_cases.size(); ++ci) {
        for (int s = 0; s < train_cases[ci].image.shape().s; ++s) {
            order.push_back({static_cast<int>(ci), s});
        }
    }

    // Validation falls back to the training set when no cases are held out
    // (small-scale overfit runs).
    const std::vector<TrainCase>& monitor_cases =
        val_cases.empty() ? train_cases : val_cases;

    Rng rng(cfg.seed);
    TrainHistory hist;
    std::vector<std::vector<T>> best;
    nn::AdamState<T> best_adam;
    int since_best = 0;
    Tensor<T> x, target;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        double train_total = 0.0;
        std::size_t train_count = 0;
        for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
            const int batch = static_cast<int>(
                std::min<std::size_t>(cfg.batch_size, order.size() - first));
            detail::fill_batch(train_cases, order, first, batch, net.spec.num_classes, x,
                               target);
            const Tensor<T> probs = net.forward(x, /*train=*/true);
            const auto loss =
                nn::combined_loss(probs, target, cfg.dice_include_background);
            nn::zero_grads(std::span<const nn::ParamRef<T>>(params));
            net.backward(loss.grad);
            nn::adam_step(std::span<const nn::ParamRef<T>>(params), adam);
            train_total += static_cast<double>(loss.value) * batch;
            train_count += batch;
        }

        const double train_loss = train_total / static_cast<double>(train_count);
        const double val_loss = evaluate_loss(net, monitor_cases, cfg);
        hist.epochs.push_back({epoch, train_loss, val_loss});

        if (hist.best_epoch < 0 || val_loss < hist.best_val_loss) {
            hist.best_epoch = epoch;
            hist.best_val_loss = val_loss;
            best = detail::snapshot(net);
            if (adam_out) best_adam = adam;
            since_best = 0;
        } else {
            ++since_best;
            if (since_best > cfg.early_stop_patience) break;
        }
    }

    if (!best.empty()) detail::restore(net, best);
    if (adam_out) *adam_out = std::move(best_adam);
    return hist;
}

}  // namespace mieval::seg
