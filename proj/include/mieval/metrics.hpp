#pragma once

#include <optional>
#include <vector>

#include "mieval/dataset.hpp"
#include "mieval/volume.hpp"

namespace mieval::metrics {

/// Dice index 2|A∩B| / (|A|+|B|) over the full 3D stack. Two empty masks
/// agree perfectly and score 1.
double dice3d(const StructureMask& a, const StructureMask& b);

/// Classical (maximum) Hausdorff distance in mm between voxel-centre point
/// sets, anisotropic spacing respected. Empty masks have no distance and
/// yield nullopt.
std::optional<double> hausdorff3d_mm(const StructureMask& a, const StructureMask& b);

/// Relative volume difference | |A| - |G| | / |G|; nullopt when the ground
/// truth is empty.
std::optional<double> rvd(const StructureMask& a, const StructureMask& gt);

/// Fraction of matching labels.
double accuracy(const std::vector<io::CaseClass>& predictions,
                const std::vector<io::CaseClass>& truths);

/// Squared Euclidean distance (mm^2) from every voxel centre to the nearest
/// set voxel of `mask`; exact separable transform. Used by hausdorff3d_mm and
/// exposed for tests.
std::vector<double> squared_distance_field(const StructureMask& mask);

}  // namespace mieval::metrics
