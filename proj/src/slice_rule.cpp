#include "mieval/slice_rule.hpp"

namespace mieval {

SliceRuleResult classify_from_segmentation(const LabelMap& lm,
                                           const SliceRuleConfig& cfg) {
    cfg.validate();
    const GridShape sh = lm.shape();
    const std::size_t hw = static_cast<std::size_t>(sh.h) * sh.w;

    SliceRuleResult result;
    for (int s = 0; s < sh.s; ++s) {
        const std::uint8_t* p = lm.labels().data() + hw * s;
        int pathological_voxels = 0;
        for (std::size_t k = 0; k < hw; ++k) {
            if (p[k] == kInfarction || p[k] == kNoReflow) ++pathological_voxels;
        }
        if (pathological_voxels >= cfg.min_pixels_per_slice) {
            result.counted_slices.push_back(s);
        }
    }
    result.label = static_cast<int>(result.counted_slices.size()) >=
                           cfg.min_pathological_slices
                       ? io::CaseClass::Pathological
                       : io::CaseClass::Normal;
    return result;
}

}  // namespace mieval
