#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "skullstrip/distance.hpp"
#include "skullstrip/image.hpp"

namespace skullstrip {

/// Edge-stopping function g in (0, 1]; small on strong image edges.
struct EdgePotential {
  Volume g;
  /// Gradient normalizer actually used (after resolving "auto").
  double edge_scale = 0.0;
};

/// Geodesic active contour parameters. Sign convention: phi < 0 is brain,
/// a positive balloon weight inflates the brain region.
struct EvolutionConfig {
  double alpha_balloon = 0.3;
  double beta_curvature = 0.5;
  double gamma_advection = 5.0;
  double sigma_mm = 1.0;
  double edge_exponent = 2.0;
  /// nullopt means "auto": the 90th percentile of the smoothed gradient
  /// magnitude inside the initial mask dilated by 5 mm.
  std::optional<double> edge_scale;
  double cfl = 0.5;
  int max_iterations = 300;
  double band_width_mm = 6.0;
  int reinit_interval = 25;
  /// Converged once fewer than this fraction of all voxels change sign per
  /// iteration for 10 consecutive iterations.
  double convergence_fraction = 5e-4;

  /// Throws ConfigError on out-of-range fields.
  void validate() const;
};

inline constexpr double kAutoEdgeScaleDilationMm = 5.0;
inline constexpr double kAutoEdgeScalePercentile = 0.9;
inline constexpr int kConvergenceWindow = 10;

/// g = 1 / (1 + (|grad(G_sigma * I)| / lambda)^p).
///
/// `initial_mask` selects the region used to resolve an automatic lambda;
/// without it the whole volume is used. Throws std::runtime_error when the
/// automatic lambda is not positive (e.g. a constant image).
EdgePotential edge_potential(const Volume& patient, const EvolutionConfig& cfg,
                             const BinaryMask* initial_mask = nullptr);

/// Mean curvature div(grad phi / |grad phi|) in 1/mm (sum of principal
/// curvatures; 2/r on a sphere). Voxel must be at least one voxel from
/// every face, otherwise std::out_of_range.
double curvature(const LevelSetField& phi, const Eigen::Vector3i& voxel);

/// Per-iteration snapshot handed to an EvolutionObserver. `after` is the
/// field produced by the PDE update, before any reinitialization.
struct EvolutionStep {
  int iteration;
  double dt;
  double time;
  const Volume& before;
  const Volume& after;
};
using EvolutionObserver = std::function<void(const EvolutionStep&)>;

struct EvolutionResult {
  LevelSetField phi;
  int iterations_used = 0;
  bool converged = false;
  /// Fraction of all voxels that changed sign, one entry per iteration.
  std::vector<double> sign_change_history;
  double elapsed_time = 0.0;
};

/// Explicit narrow-band evolution of
///   dphi/dt = -alpha g |grad phi| + beta g kappa |grad phi| + gamma grad g . grad phi
/// with Godunov upwinding for the balloon term, central differences for the
/// curvature term, and per-axis upwinding (by the sign of grad g) for the
/// advection term. Voxels on the outer faces of the grid never move.
///
/// Throws GeometryMismatch if phi0 and g disagree, std::runtime_error on
/// non-finite values or when the front vanishes.
EvolutionResult evolve(const LevelSetField& phi0, const EdgePotential& g,
                       const EvolutionConfig& cfg, const EvolutionObserver& observer = {});

/// Rebuilds phi as an exact signed distance of the set {phi <= 0}.
LevelSetField reinitialize(const LevelSetField& phi);

/// Mask of phi <= 0, optionally restricted to its largest 6-connected part.
BinaryMask extract_mask(const LevelSetField& phi, bool keep_largest_component);

/// Largest 6-connected component; ties go to the component whose first
/// voxel has the smallest linear index.
BinaryMask largest_component(const BinaryMask& m);

}  // namespace skullstrip
