#pragma once

#include <cstddef>

#include "skullstrip/image.hpp"

namespace skullstrip {

struct DiceReport {
  double dice = 1.0;
  std::size_t true_voxels_a = 0;
  std::size_t true_voxels_b = 0;
  std::size_t intersection = 0;
};

/// 2|A and B| / (|A| + |B|); 1 when both masks are empty.
/// Throws GeometryMismatch unless the geometries match exactly.
DiceReport dice(const BinaryMask& a, const BinaryMask& b);

struct SurfaceDistance {
  double mean_mm = 0.0;
  double max_mm = 0.0;
};

/// Voxels of the mask with a 6-neighbour outside the mask or outside the grid.
BinaryMask boundary_voxels(const BinaryMask& m);

/// Symmetric mean and maximum distance between the boundary voxels of the
/// two masks. Throws std::invalid_argument for an empty mask.
SurfaceDistance boundary_distance_stats(const BinaryMask& a, const BinaryMask& b);

}  // namespace skullstrip
