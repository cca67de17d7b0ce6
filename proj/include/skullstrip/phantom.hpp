#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "skullstrip/image.hpp"
#include "skullstrip/transform.hpp"

namespace skullstrip {

struct TissueIntensities {
  double background = 0.0;
  double scalp = 60.0;
  double skull = 20.0;
  double csf = 15.0;
  double brain = 100.0;
  double tumor = 140.0;
};

/// Synthetic head: nested ellipsoids (brain, CSF gap, skull, scalp) centred
/// on the grid centre, plus a spherical tumor. The grid centre sits at world
/// (0, 0, 0).
struct PhantomSpec {
  Eigen::Vector3i dims = Eigen::Vector3i::Constant(64);
  Eigen::Vector3d spacing = Eigen::Vector3d::Ones();
  Eigen::Vector3d brain_semi_axes{22.0, 26.0, 20.0};
  double skull_inner_offset = 2.0;
  double skull_thickness = 3.0;
  double scalp_thickness = 3.0;
  TissueIntensities intensities;
  /// Tumor centre relative to the brain centre. The default leaves the tumor
  /// surface 1 mm inside the brain boundary.
  Eigen::Vector3d tumor_center_offset{13.0, 0.0, 0.0};
  double tumor_radius = 8.0;
  bool with_tumor = true;
  double noise_sigma = 4.0;
  std::uint64_t seed = 42;
  /// Warps the anatomy forward: a canonical point p appears at T(p).
  std::optional<AffineTransform> affine_perturbation;

  /// Throws ConfigError for non-positive sizes or a tumor outside the head.
  void validate() const;
};

/// Grid geometry of the phantom: identity direction, centred origin.
Geometry phantom_geometry(const PhantomSpec& spec);

struct Phantom {
  Volume image;
  /// Ground truth: brain ellipsoid plus tumor.
  BinaryMask brain;
};

/// Noise is additive Gaussian drawn with std::mt19937_64 seeded by `seed`
/// and a Box-Muller transform, one draw per voxel in x-fastest order. The
/// engine output is fixed by the C++ standard; the transform uses std::log,
/// std::sqrt, std::sin and std::cos, so bit-identical noise across machines
/// also needs the same C math library.
Phantom generate_phantom(const PhantomSpec& spec);

/// Tumor-free, noise-free, unperturbed anatomy and its exact brain mask.
Phantom generate_atlas(const PhantomSpec& spec);

}  // namespace skullstrip
