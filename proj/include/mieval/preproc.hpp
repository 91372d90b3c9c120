#pragma once

#include "mieval/volume.hpp"

namespace mieval {

struct PreprocConfig {
    int target_h = 256;
    int target_w = 256;
    double epsilon_std = 1e-8;

    void validate() const;
};

/// Per-slice bilinear resample to (target_h, target_w), half-pixel-centre
/// convention. In-plane spacing is rescaled so physical extent is preserved;
/// slice count and case id are unchanged.
Volume resize_volume(const Volume& v, const PreprocConfig& cfg);

/// Nearest-neighbour resize; never introduces labels absent from the input.
LabelMap resize_labels(const LabelMap& lm, const PreprocConfig& cfg);
LabelMap resize_labels_to(const LabelMap& lm, int target_h, int target_w);

/// Zero-centre and divide by the standard deviation, both computed over the
/// whole 3D case. Constant volumes map to all zeros via the epsilon guard.
Volume normalize_intensity(const Volume& v, const PreprocConfig& cfg);

/// resize_volume followed by normalize_intensity.
Volume preprocess_case(const Volume& v, const PreprocConfig& cfg);

}  // namespace mieval
