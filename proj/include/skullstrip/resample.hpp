#pragma once

#include "skullstrip/image.hpp"
#include "skullstrip/transform.hpp"

namespace skullstrip {

enum class Interpolation { trilinear, nearest };

/// Trilinear interpolation at a continuous index. Returns `outside` when any
/// voxel carrying nonzero weight lies outside the grid; exact at grid nodes.
float sample_trilinear(const Volume& v, const Eigen::Vector3d& ijk, float outside);

/// Nearest-neighbour lookup (ties round half up); `outside` beyond the grid.
float sample_nearest(const Volume& v, const Eigen::Vector3d& ijk, float outside);

/// Pulls `src` onto `target` through `t` (target world -> source world).
Volume resample(const Volume& src, const Geometry& target, const AffineTransform& t,
                Interpolation interp, float outside);

/// Maps target continuous indices to source continuous indices through `t`.
struct IndexMap {
  Eigen::Matrix3d linear;
  Eigen::Vector3d offset;

  IndexMap(const Geometry& target, const Geometry& source, const AffineTransform& t);

  /// Result is snapped onto integer nodes when within 1e-9 voxel, so an
  /// identity map over identical grids stays node-exact despite rounding.
  Eigen::Vector3d operator()(const Eigen::Vector3d& ijk) const;
};

/// Block-average decimation by an integer factor per axis. Partial blocks at
/// the far border average the voxels they contain. The first output voxel is
/// centered on the centroid of its source block.
Volume downsample(const Volume& v, const Eigen::Vector3i& factor);

}  // namespace skullstrip
