#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mieval/nn/layers.hpp"
#include "mieval/nn/optim.hpp"

namespace mieval::seg {

using nn::Tensor;

/// Encoder-decoder shape: base_features maps at full resolution, channel
/// count doubling after every 2x2 max-pool, mirrored decoder with skip
/// concatenations, 1x1 output convolution + softmax.
struct UNetSpec {
    int in_channels = 1;
    int base_features = 32;
    int depth = 4;
    int num_classes = 2;
    int input_size = 256;
    int se_reduction = 16;

    void validate() const {
        if (depth < 1) throw ConfigError("unet: depth must be >= 1");
        if (base_features < 1) throw ConfigError("unet: base_features must be >= 1");
        if (num_classes < 2) throw ConfigError("unet: num_classes must be >= 2");
        if (in_channels < 1) throw ConfigError("unet: in_channels must be >= 1");
        if (se_reduction < 1) throw ConfigError("unet: se_reduction must be >= 1");
        if (input_size < 1 || input_size % (1 << depth) != 0) {
            throw ConfigError("unet: input size " + std::to_string(input_size) +
                              " not divisible by 2^depth");
        }
    }

    int features_at(int stage) const { return base_features << stage; }
};

/// The repeated building block: (3x3 conv, ELU, batch norm, SE) twice.
template <typename T>
struct DoubleConv {
    nn::Conv2d<T> conv1, conv2;
    nn::Elu<T> elu1, elu2;
    nn::BatchNorm2d<T> bn1, bn2;
    nn::SEBlock<T> se1, se2;

    DoubleConv() = default;
    DoubleConv(int cin, int cout, int se_reduction)
        : conv1(cin, cout, 3), conv2(cout, cout, 3), bn1(cout), bn2(cout),
          se1(cout, se_reduction), se2(cout, se_reduction) {}

    Tensor<T> forward(const Tensor<T>& x, bool train) {
        Tensor<T> t = se1.forward(bn1.forward(elu1.forward(conv1.forward(x)), train));
        return se2.forward(bn2.forward(elu2.forward(conv2.forward(t)), train));
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> g = conv2.backward(elu2.backward(bn2.backward(se2.backward(gy))));
        return conv1.backward(elu1.backward(bn1.backward(se1.backward(g))));
    }

    void collect_params(const std::string& prefix, std::vector<nn::ParamRef<T>>& out) {
        conv1.collect_params(prefix + ".conv1", out);
        bn1.collect_params(prefix + ".bn1", out);
        se1.collect_params(prefix + ".se1", out);
        conv2.collect_params(prefix + ".conv2", out);
        bn2.collect_params(prefix + ".bn2", out);
        se2.collect_params(prefix + ".se2", out);
    }
    void collect_buffers(const std::string& prefix, std::vector<nn::BufferRef<T>>& out) {
        bn1.collect_buffers(prefix + ".bn1", out);
        bn2.collect_buffers(prefix + ".bn2", out);
    }

    void init_weights(Rng& rng) {
        nn::he_init(conv1.w, conv1.fan_in(), rng);
        nn::he_init(se1.w1, se1.c, rng);
        nn::he_init(se1.w2, se1.hidden, rng);
        nn::he_init(conv2.w, conv2.fan_in(), rng);
        nn::he_init(se2.w1, se2.c, rng);
        nn::he_init(se2.w2, se2.hidden, rng);
    }
};

template <typename T>
struct UNet {
    UNetSpec spec;
    std::vector<DoubleConv<T>> enc;
    std::vector<nn::MaxPool2<T>> pools;
    DoubleConv<T> bottom;
    std::vector<nn::UpConv2<T>> ups;   // indexed by stage, ups[i]: 2f_i -> f_i
    std::vector<DoubleConv<T>> dec;
    nn::Conv2d<T> head;
    nn::SoftmaxChannels<T> softmax;

    explicit UNet(const UNetSpec& s) : spec(s) {
        spec.validate();
        int cin = spec.in_channels;
        for (int i = 0; i < spec.depth; ++i) {
            enc.emplace_back(cin, spec.features_at(i), spec.se_reduction);
            cin = spec.features_at(i);
        }
        pools.resize(spec.depth);
        bottom = DoubleConv<T>(spec.features_at(spec.depth - 1), spec.features_at(spec.depth),
                               spec.se_reduction);
        for (int i = 0; i < spec.depth; ++i) {
            ups.emplace_back(spec.features_at(i + 1), spec.features_at(i));
            dec.emplace_back(2 * spec.features_at(i), spec.features_at(i),
                             spec.se_reduction);
        }
        head = nn::Conv2d<T>(spec.base_features, spec.num_classes, 1);
    }

    void init_weights(std::uint64_t seed) {
        Rng rng(seed);
        for (auto& block : enc) block.init_weights(rng);
        bottom.init_weights(rng);
        for (int i = 0; i < spec.depth; ++i) {
            nn::he_init(ups[i].w, ups[i].fan_in(), rng);
            dec[i].init_weights(rng);
        }
        nn::he_init(head.w, head.fan_in(), rng);
    }

    /// Forward pass to per-pixel class probabilities.
    Tensor<T> forward(const Tensor<T>& x, bool train) {
        if (x.c != spec.in_channels) throw ShapeError("unet: wrong input channels");
        if (x.h % (1 << spec.depth) != 0 || x.w % (1 << spec.depth) != 0) {
            throw ShapeError("unet: input " + x.shape_str() +
                             " not divisible by 2^depth");
        }
        skips_.clear();
        Tensor<T> cur = x;
        for (int i = 0; i < spec.depth; ++i) {
            skips_.push_back(enc[i].forward(cur, train));
            cur = pools[i].forward(skips_.back());
        }
        cur = bottom.forward(cur, train);
        for (int i = spec.depth - 1; i >= 0; --i) {
            Tensor<T> u = ups[i].forward(cur);
            cur = dec[i].forward(nn::concat_channels(skips_[i], u), train);
        }
        return softmax.forward(head.forward(cur));
    }

    /// Backward pass from the gradient w.r.t. the softmax probabilities.
    void backward(const Tensor<T>& gprobs) {
        Tensor<T> g = head.backward(softmax.backward(gprobs));
        std::vector<Tensor<T>> gskips(spec.depth);
        for (int i = 0; i < spec.depth; ++i) {
            g = dec[i].backward(g);
            auto [gskip, gup] = nn::split_channels(g, spec.features_at(i));
            gskips[i] = std::move(gskip);
            g = ups[i].backward(gup);
        }
        g = bottom.backward(g);
        for (int i = spec.depth - 1; i >= 0; --i) {
            g = pools[i].backward(g);
            for (std::size_t k = 0; k < g.v.size(); ++k) g.v[k] += gskips[i].v[k];
            g = enc[i].backward(g);
        }
    }

    std::vector<nn::ParamRef<T>> params() {
        std::vector<nn::ParamRef<T>> out;
        for (int i = 0; i < spec.depth; ++i) {
            enc[i].collect_params("enc" + std::to_string(i), out);
        }
        bottom.collect_params("bottom", out);
        for (int i = 0; i < spec.depth; ++i) {
            ups[i].collect_params("up" + std::to_string(i), out);
            dec[i].collect_params("dec" + std::to_string(i), out);
        }
        head.collect_params("head", out);
        return out;
    }

    std::vector<nn::BufferRef<T>> buffers() {
        std::vector<nn::BufferRef<T>> out;
        for (int i = 0; i < spec.depth; ++i) {
            enc[i].collect_buffers("enc" + std::to_string(i), out);
        }
        bottom.collect_buffers("bottom", out);
        for (int i = 0; i < spec.depth; ++i) {
            dec[i].collect_buffers("dec" + std::to_string(i), out);
        }
        return out;
    }

    std::size_t param_count() {
        std::size_t n = 0;
        for (const auto& p : params()) n += p.value->size();
        return n;
    }

private:
    std::vector<Tensor<T>> skips_;
};

}  // namespace mieval::seg
