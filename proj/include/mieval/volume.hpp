#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

#include "mieval/errors.hpp"

namespace mieval {

/// Segmentation label codes shared by files, networks and metrics.
/// The ordering follows the challenge dataset convention.
enum LabelCode : std::uint8_t {
    kBackground = 0,
    kCavity = 1,
    kMyocardium = 2,
    kInfarction = 3,
    kNoReflow = 4,
};

inline constexpr int kNumLabelCodes = 5;

/// Voxel grid dimensions in slice-major order (S, H, W).
struct GridShape {
    int s = 0;
    int h = 0;
    int w = 0;

    std::size_t voxels() const {
        return static_cast<std::size_t>(s) * static_cast<std::size_t>(h) *
               static_cast<std::size_t>(w);
    }
    bool operator==(const GridShape&) const = default;
};

/// Physical voxel spacing in mm, aligned with the (S, H, W) axes.
struct Spacing {
    double dz = 1.0;
    double dy = 1.0;
    double dx = 1.0;

    bool operator==(const Spacing&) const = default;
};

/// 3D stack of 2D DE-MRI slices. Immutable after construction; voxel order is
/// slice-major with W fastest.
class Volume {
public:
    Volume(GridShape shape, Spacing spacing, std::vector<float> data,
           std::string case_id = {});

    const GridShape& shape() const { return shape_; }
    const Spacing& spacing() const { return spacing_; }
    const std::string& case_id() const { return case_id_; }
    const std::vector<float>& data() const { return data_; }

    float at(int s, int y, int x) const {
        return data_[index(s, y, x)];
    }
    std::size_t index(int s, int y, int x) const {
        return (static_cast<std::size_t>(s) * shape_.h + y) * shape_.w + x;
    }

private:
    GridShape shape_;
    Spacing spacing_;
    std::vector<float> data_;
    std::string case_id_;
};

/// Integer per-voxel labels over the 5-code domain, same grid conventions as
/// Volume.
class LabelMap {
public:
    LabelMap(GridShape shape, Spacing spacing, std::vector<std::uint8_t> labels);

    const GridShape& shape() const { return shape_; }
    const Spacing& spacing() const { return spacing_; }
    const std::vector<std::uint8_t>& labels() const { return labels_; }

    std::uint8_t at(int s, int y, int x) const { return labels_[index(s, y, x)]; }
    std::size_t index(int s, int y, int x) const {
        return (static_cast<std::size_t>(s) * shape_.h + y) * shape_.w + x;
    }

private:
    GridShape shape_;
    Spacing spacing_;
    std::vector<std::uint8_t> labels_;
};

/// Boolean voxel grid derived from a LabelMap by selecting a label subset.
class StructureMask {
public:
    StructureMask(GridShape shape, Spacing spacing, std::vector<std::uint8_t> bits);

    const GridShape& shape() const { return shape_; }
    const Spacing& spacing() const { return spacing_; }
    const std::vector<std::uint8_t>& bits() const { return bits_; }

    bool at(int s, int y, int x) const {
        return bits_[(static_cast<std::size_t>(s) * shape_.h + y) * shape_.w + x] != 0;
    }
    std::size_t count() const;

private:
    GridShape shape_;
    Spacing spacing_;
    std::vector<std::uint8_t> bits_;
};

/// Mask of voxels whose label is in `labels`. Labels outside {0..4} raise
/// InvalidLabelError.
StructureMask extract_mask(const LabelMap& lm, std::initializer_list<int> labels);
StructureMask extract_mask(const LabelMap& lm, const std::vector<int>& labels);

/// Voxel count per label present in the map; counts sum to S*H*W.
std::map<int, std::size_t> label_histogram(const LabelMap& lm);

}  // namespace mieval
