#include "mieval/seg/model.hpp"

namespace mieval::seg {

std::string to_string(NetRole role) {
    return role == NetRole::Anatomical ? "anatomical" : "pathological";
}

NetRole role_from_string(const std::string& s) {
    if (s == "anatomical") return NetRole::Anatomical;
    if (s == "pathological") return NetRole::Pathological;
    throw ConfigError("unknown network role \"" + s + "\"");
}

int num_classes_for_role(NetRole role) {
    return role == NetRole::Anatomical ? 3 : 4;
}

namespace {

// Model-space class codes for the pathological network.
constexpr std::uint8_t kPathBackground = 0;
constexpr std::uint8_t kPathNormalMyo = 1;
constexpr std::uint8_t kPathInfarction = 2;
constexpr std::uint8_t kPathNoReflow = 3;

}  // namespace

LabelMap map_labels_for_role(const LabelMap& gt, NetRole role) {
    std::vector<std::uint8_t> out(gt.labels().size());
    if (role == NetRole::Anatomical) {
        // background, cavity kept; myocardium plus any pathology inside it
        // all count as myocardium.
        static constexpr std::uint8_t table[5] = {0, 1, 2, 2, 2};
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = table[gt.labels()[i]];
    } else {
        static constexpr std::uint8_t table[5] = {
            kPathBackground, kPathBackground, kPathNormalMyo, kPathInfarction,
            kPathNoReflow};
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = table[gt.labels()[i]];
    }
    return LabelMap(gt.shape(), gt.spacing(), std::move(out));
}

LabelMap refine_and_merge(const LabelMap& anat, const LabelMap& path) {
    if (anat.shape() != path.shape()) {
        throw ShapeError("refine_and_merge: grid shapes differ");
    }
    for (std::uint8_t v : anat.labels()) {
        if (v > kMyocardium) {
            throw InvalidLabelError("refine_and_merge: anatomical map has code > 2");
        }
    }
    for (std::uint8_t v : path.labels()) {
        if (v > kPathNoReflow) {
            throw InvalidLabelError("refine_and_merge: pathological map has code > 3");
        }
    }

    std::vector<std::uint8_t> out(anat.labels().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint8_t a = anat.labels()[i];
        if (a != kMyocardium) {
            out[i] = a;  // background or LV cavity straight from the anatomical net
            continue;
        }
        switch (path.labels()[i]) {
            case kPathInfarction: out[i] = kInfarction; break;
            case kPathNoReflow: out[i] = kNoReflow; break;
            default: out[i] = kMyocardium; break;
        }
    }
    return LabelMap(anat.shape(), anat.spacing(), std::move(out));
}

}  // namespace mieval::seg
