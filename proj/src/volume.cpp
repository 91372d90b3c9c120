#include "mieval/volume.hpp"

#include <cmath>

namespace mieval {

namespace {

void check_shape(const GridShape& shape) {
    if (shape.s < 1 || shape.h < 1 || shape.w < 1) {
        throw ShapeError("voxel grid dimensions must all be >= 1");
    }
}

void check_spacing(const Spacing& sp) {
    for (double v : {sp.dz, sp.dy, sp.dx}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw NumericError("voxel spacing must be strictly positive and finite");
        }
    }
}

}  // namespace

Volume::Volume(GridShape shape, Spacing spacing, std::vector<float> data,
               std::string case_id)
    : shape_(shape), spacing_(spacing), data_(std::move(data)),
      case_id_(std::move(case_id)) {
    check_shape(shape_);
    check_spacing(spacing_);
    if (data_.size() != shape_.voxels()) {
        throw ShapeError("volume data size does not match grid shape");
    }
    for (float v : data_) {
        if (!std::isfinite(v)) throw NumericError("volume contains non-finite voxels");
    }
}

LabelMap::LabelMap(GridShape shape, Spacing spacing, std::vector<std::uint8_t> labels)
    : shape_(shape), spacing_(spacing), labels_(std::move(labels)) {
    check_shape(shape_);
    check_spacing(spacing_);
    if (labels_.size() != shape_.voxels()) {
        throw ShapeError("label data size does not match grid shape");
    }
    for (std::uint8_t v : labels_) {
        if (v >= kNumLabelCodes) {
            throw InvalidLabelError("label code " + std::to_string(int(v)) +
                                    " outside {0..4}");
        }
    }
}

StructureMask::StructureMask(GridShape shape, Spacing spacing,
                             std::vector<std::uint8_t> bits)
    : shape_(shape), spacing_(spacing), bits_(std::move(bits)) {
    check_shape(shape_);
    check_spacing(spacing_);
    if (bits_.size() != shape_.voxels()) {
        throw ShapeError("mask data size does not match grid shape");
    }
}

std::size_t StructureMask::count() const {
    std::size_t n = 0;
    for (std::uint8_t b : bits_) n += (b != 0);
    return n;
}

StructureMask extract_mask(const LabelMap& lm, const std::vector<int>& labels) {
    bool wanted[kNumLabelCodes] = {};
    for (int l : labels) {
        if (l < 0 || l >= kNumLabelCodes) {
            throw InvalidLabelError("mask selector label " + std::to_string(l) +
                                    " outside {0..4}");
        }
        wanted[l] = true;
    }
    std::vector<std::uint8_t> bits(lm.labels().size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        bits[i] = wanted[lm.labels()[i]] ? 1 : 0;
    }
    return StructureMask(lm.shape(), lm.spacing(), std::move(bits));
}

StructureMask extract_mask(const LabelMap& lm, std::initializer_list<int> labels) {
    return extract_mask(lm, std::vector<int>(labels));
}

std::map<int, std::size_t> label_histogram(const LabelMap& lm) {
    std::map<int, std::size_t> counts;
    for (std::uint8_t v : lm.labels()) ++counts[v];
    return counts;
}

}  // namespace mieval
