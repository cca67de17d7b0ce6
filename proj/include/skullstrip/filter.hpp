#pragma once

#include "skullstrip/image.hpp"

namespace skullstrip {

/// Separable Gaussian blur with a physical-unit width. The per-axis kernel
/// uses sigma_mm / spacing voxels, is truncated at 3 sigma and renormalized
/// to unit sum; borders clamp to the edge voxel.
Volume gaussian_smooth(const Volume& v, double sigma_mm);

/// 1-D kernel used by gaussian_smooth for a sigma given in voxels.
std::vector<double> gaussian_kernel(double sigma_voxels);

/// World-frame gradient in intensity per mm. Central differences inside,
/// one-sided at the faces. Requires at least 2 voxels along every axis.
VectorField gradient(const Volume& v);

/// Gradient expressed along the grid axes (per mm, no direction applied).
/// Same stencil as gradient(); used where only axis-aligned geometry matters.
VectorField index_gradient(const Volume& v);

/// Pointwise Euclidean norm of a vector field.
Volume magnitude(const VectorField& f);

}  // namespace skullstrip
