#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "mieval/nn/checkpoint.hpp"
#include "mieval/seg/train.hpp"
#include "mieval/seg/unet.hpp"
#include "mieval/volume.hpp"

namespace mieval::seg {

/// The two separately trained networks of the segmentation stage.
enum class NetRole { Anatomical, Pathological };

std::string to_string(NetRole role);
NetRole role_from_string(const std::string& s);

/// Anatomical classes: background, LV cavity, myocardium.
/// Pathological classes: background, normal myocardium, infarction, no-reflow.
int num_classes_for_role(NetRole role);

/// Ground-truth 5-code labels mapped into a network's class space. For the
/// anatomical network infarction/no-reflow count as myocardium; for the
/// pathological network the LV cavity counts as background and untouched
/// myocardium becomes "normal myocardium".
LabelMap map_labels_for_role(const LabelMap& gt, NetRole role);

/// Pathology masked to the anatomical myocardium, then merged into the final
/// 5-code map: outside the myocardium the anatomical label wins; inside,
/// pathological infarction/no-reflow become codes 3/4 and everything else is
/// myocardium.
LabelMap refine_and_merge(const LabelMap& anat, const LabelMap& path);

/// Per-slice argmax of the softmax output, stacked into a 3D map. Ties break
/// toward the lower class index.
template <typename T>
LabelMap predict_case(UNet<T>& net, const Volume& v) {
    const GridShape shape = v.shape();
    std::vector<std::uint8_t> labels(shape.voxels());
    const std::size_t hw = static_cast<std::size_t>(shape.h) * shape.w;
    Tensor<T> x(1, 1, shape.h, shape.w);
    for (int s = 0; s < shape.s; ++s) {
        const float* src = v.data().data() + hw * s;
        for (std::size_t k = 0; k < hw; ++k) x.v[k] = static_cast<T>(src[k]);
        const Tensor<T> probs = net.forward(x, /*train=*/false);
        for (std::size_t k = 0; k < hw; ++k) {
            int best = 0;
            T best_p = probs.v[k];
            for (int j = 1; j < probs.c; ++j) {
                const T p = probs.v[static_cast<std::size_t>(j) * hw + k];
                if (p > best_p) {
                    best_p = p;
                    best = j;
                }
            }
            labels[hw * s + k] = static_cast<std::uint8_t>(best);
        }
    }
    return LabelMap(shape, v.spacing(), std::move(labels));
}

/// A role-tagged network. predict/merge helpers live on the free functions.
template <typename T>
struct SegModel {
    NetRole role;
    UNet<T> net;
};

/// Builds a role-appropriate network with He-initialized weights. The spec's
/// num_classes must match the role's class count.
template <typename T>
SegModel<T> build_seg_model(NetRole role, UNetSpec spec, std::uint64_t seed) {
    if (spec.num_classes != num_classes_for_role(role)) {
        throw ConfigError("unet: role " + to_string(role) + " needs " +
                          std::to_string(num_classes_for_role(role)) + " classes");
    }
    SegModel<T> model{role, UNet<T>(spec)};
    model.net.init_weights(seed);
    return model;
}

// --- checkpoint wiring -----------------------------------------------------

template <typename T>
nn::Checkpoint model_to_checkpoint(SegModel<T>& model, const nn::AdamState<T>* adam) {
    nn::Checkpoint ckpt;
    const UNetSpec& s = model.net.spec;
    ckpt.push_back(nn::scalar_blob("meta/role", static_cast<std::int64_t>(model.role)));
    ckpt.push_back(nn::scalar_blob("meta/in_channels", s.in_channels));
    ckpt.push_back(nn::scalar_blob("meta/base_features", s.base_features));
    ckpt.push_back(nn::scalar_blob("meta/depth", s.depth));
    ckpt.push_back(nn::scalar_blob("meta/num_classes", s.num_classes));
    ckpt.push_back(nn::scalar_blob("meta/input_size", s.input_size));
    ckpt.push_back(nn::scalar_blob("meta/se_reduction", s.se_reduction));
    auto params = model.net.params();
    for (const auto& p : params) ckpt.push_back(nn::to_blob("param/" + p.name, *p.value));
    for (const auto& b : model.net.buffers()) {
        ckpt.push_back(nn::to_blob("buffer/" + b.name, *b.value));
    }
    if (adam) {
        ckpt.push_back(nn::scalar_blob("adam/t", adam->t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor<T> m = *params[i].value, v = *params[i].value;
            m.v = adam->m[i];
            v.v = adam->v[i];
            ckpt.push_back(nn::to_blob("adam/m/" + params[i].name, m));
            ckpt.push_back(nn::to_blob("adam/v/" + params[i].name, v));
        }
    }
    return ckpt;
}

template <typename T>
SegModel<T> model_from_checkpoint(const nn::Checkpoint& ckpt,
                                  nn::AdamState<T>* adam = nullptr) {
    auto scalar = [&](const char* name) {
        const auto* blob = nn::find_blob(ckpt, name);
        if (!blob) throw DataError(std::string("checkpoint: missing ") + name);
        return nn::scalar_from_blob(*blob);
    };
    UNetSpec spec;
    spec.in_channels = static_cast<int>(scalar("meta/in_channels"));
    spec.base_features = static_cast<int>(scalar("meta/base_features"));
    spec.depth = static_cast<int>(scalar("meta/depth"));
    spec.num_classes = static_cast<int>(scalar("meta/num_classes"));
    spec.input_size = static_cast<int>(scalar("meta/input_size"));
    spec.se_reduction = static_cast<int>(scalar("meta/se_reduction"));
    SegModel<T> model{static_cast<NetRole>(scalar("meta/role")), UNet<T>(spec)};

    auto params = model.net.params();
    for (const auto& p : params) {
        const auto* blob = nn::find_blob(ckpt, "param/" + p.name);
        if (!blob) throw DataError("checkpoint: missing parameter " + p.name);
        nn::from_blob(*blob, *p.value);
    }
    for (const auto& b : model.net.buffers()) {
        const auto* blob = nn::find_blob(ckpt, "buffer/" + b.name);
        if (!blob) throw DataError("checkpoint: missing buffer " + b.name);
        nn::from_blob(*blob, *b.value);
    }
    if (adam) {
        adam->init(std::span<const nn::ParamRef<T>>(params));
        adam->t = scalar("adam/t");
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor<T> tmp;
            const auto* mb = nn::find_blob(ckpt, "adam/m/" + params[i].name);
            const auto* vb = nn::find_blob(ckpt, "adam/v/" + params[i].name);
            if (!mb || !vb) throw DataError("checkpoint: missing optimizer state");
            nn::from_blob(*mb, tmp);
            adam->m[i] = tmp.v;
            nn::from_blob(*vb, tmp);
            adam->v[i] = tmp.v;
        }
    }
    return model;
}

}  // namespace mieval::seg
