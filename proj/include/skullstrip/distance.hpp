#pragma once

#include <vector>

#include "skullstrip/image.hpp"

namespace skullstrip {

/// Exact squared Euclidean distance (mm^2) from every voxel center to the
/// nearest voxel whose `features` entry is set, honouring per-axis spacing.
/// Uses the separable lower-envelope-of-parabolas algorithm, one pass per
/// axis. Voxels with no feature anywhere in the grid get +infinity.
std::vector<double> squared_distance_transform(const BinaryMask& features);

/// Level-set function: a signed distance in mm, negative inside the brain.
struct LevelSetField {
  Volume phi;
  const Geometry& geometry() const { return phi.geometry(); }
};

/// Signed distance of the mask boundary, placed half way between the last
/// inside and first outside voxel centres: inside voxels get
/// -(d_in - h/2), outside voxels +(d_out - h/2), h the smallest spacing.
/// d_in is the distance to the nearest outside voxel and vice versa.
/// Throws std::invalid_argument for an empty or full mask.
LevelSetField signed_distance_from_mask(const BinaryMask& m);

/// Voxels within `radius_mm` of the mask (the mask itself included).
BinaryMask dilate(const BinaryMask& m, double radius_mm);

}  // namespace skullstrip
