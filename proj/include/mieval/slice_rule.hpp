#pragma once

#include <vector>

#include "mieval/dataset.hpp"
#include "mieval/volume.hpp"

namespace mieval {

/// "Two or more slices with pathology" case rule.
struct SliceRuleConfig {
    int min_pathological_slices = 2;
    int min_pixels_per_slice = 1;

    void validate() const {
        if (min_pathological_slices < 1 || min_pixels_per_slice < 1) {
            throw ConfigError("slice_rule: both thresholds must be >= 1");
        }
    }
};

struct SliceRuleResult {
    io::CaseClass label = io::CaseClass::Normal;
    std::vector<int> counted_slices;
};

/// A slice counts when it holds at least min_pixels_per_slice voxels labeled
/// infarction or no-reflow; the case is pathological when at least
/// min_pathological_slices slices count.
SliceRuleResult classify_from_segmentation(const LabelMap& lm, const SliceRuleConfig& cfg);

}  // namespace mieval
