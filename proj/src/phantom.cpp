#include "skullstrip/phantom.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "skullstrip/errors.hpp"

namespace skullstrip {
namespace {

/// Implicit ellipsoid test: sum (p_i / a_i)^2 <= 1.
bool inside_ellipsoid(const Eigen::Vector3d& p, const Eigen::Vector3d& semi_axes) {
  return p.cwiseQuotient(semi_axes).squaredNorm() <= 1.0;
}

/// Standard normal deviates via the Box-Muller transform; the standard
/// library distributions are not specified bit-for-bit across platforms.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // 53-bit uniform in (0, 1].
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace

void PhantomSpec::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("phantom: " + what); };
  if ((dims.array() < 1).any()) fail("dims must be >= 1");
  if (!(spacing.array() > 0).all() || !spacing.allFinite()) fail("spacing must be > 0");
  if (!(brain_semi_axes.array() > 0).all() || !brain_semi_axes.allFinite())
    fail("brain_semi_axes must be > 0");
  if (!(skull_inner_offset > 0) || !(skull_thickness > 0) || !(scalp_thickness > 0))
    fail("shell thicknesses must be > 0");
  if (!(tumor_radius > 0) || !std::isfinite(tumor_radius)) fail("tumor_radius must be > 0");
  if (!(noise_sigma >= 0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be >= 0");
  for (double v : {intensities.background, intensities.scalp, intensities.skull, intensities.csf,
                   intensities.brain, intensities.tumor})
    if (!std::isfinite(v)) fail("intensities must be finite");
  if (affine_perturbation && !(std::abs(affine_perturbation->matrix.determinant()) > 1e-12))
    fail("affine_perturbation must be invertible");

  if (with_tumor) {
    if (!tumor_center_offset.allFinite()) fail("tumor_center_offset must be finite");
    // Sample the tumor sphere densely (Fibonacci lattice) against the
    // outer scalp surface.
    const Eigen::Vector3d head = brain_semi_axes.array() + skull_inner_offset + skull_thickness +
                                 scalp_thickness;
    constexpr int kSamples = 4000;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int n = 0; n < kSamples; ++n) {
      const double z = 1.0 - 2.0 * (n + 0.5) / kSamples;
      const double r = std::sqrt(1.0 - z * z);
      const Eigen::Vector3d dir(r * std::cos(golden * n), r * std::sin(golden * n), z);
      if (!inside_ellipsoid(tumor_center_offset + tumor_radius * dir, head))
        fail("tumor must lie fully inside the head");
    }
  }
}

Geometry phantom_geometry(const PhantomSpec& spec) {
  Geometry g;
  g.dims = spec.dims;
  g.spacing = spec.spacing;
  g.origin = -0.5 * (spec.dims.cast<double>().array() - 1.0).matrix().cwiseProduct(spec.spacing);
  g.validate();
  return g;
}

Phantom generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const Geometry geom = phantom_geometry(spec);
  const Eigen::Vector3d csf_axes = spec.brain_semi_axes.array() + spec.skull_inner_offset;
  const Eigen::Vector3d skull_axes = csf_axes.array() + spec.skull_thickness;
  const Eigen::Vector3d scalp_axes = skull_axes.array() + spec.scalp_thickness;
  const double tumor_r2 = spec.tumor_radius * spec.tumor_radius;
  const std::optional<AffineTransform> inverse =
      spec.affine_perturbation ? std::optional(invert(*spec.affine_perturbation)) : std::nullopt;
  const auto& tissue = spec.intensities;

  Phantom out{Volume(geom), BinaryMask(geom)};
  NormalSource noise(spec.seed);
  const auto& d = geom.dims;
  std::size_t n = 0;
  for (int k = 0; k < d.z(); ++k)
    for (int j = 0; j < d.y(); ++j)
      for (int i = 0; i < d.x(); ++i, ++n) {
        Eigen::Vector3d p = index_to_world(geom, Eigen::Vector3d(i, j, k));
        if (inverse) p = apply_point(*inverse, p);

        const bool brain = inside_ellipsoid(p, spec.brain_semi_axes);
        const bool tumor = spec.with_tumor && (p - spec.tumor_center_offset).squaredNorm() <= tumor_r2;
        double value = tissue.background;
        if (tumor)
          value = tissue.tumor;
        else if (brain)
          value = tissue.brain;
        else if (inside_ellipsoid(p, csf_axes))
          value = tissue.csf;
        else if (inside_ellipsoid(p, skull_axes))
          value = tissue.skull;
        else if (inside_ellipsoid(p, scalp_axes))
          value = tissue.scalp;

        if (spec.noise_sigma > 0) value += spec.noise_sigma * noise.next();
        out.image[n] = static_cast<float>(value);
        out.brain[n] = (brain || tumor) ? 1 : 0;
      }
  return out;
}

Phantom generate_atlas(const PhantomSpec& spec) {
  PhantomSpec atlas = spec;
  atlas.with_tumor = false;
  atlas.noise_sigma = 0.0;
  atlas.affine_perturbation.reset();
  return generate_phantom(atlas);
}

}  // namespace skullstrip
