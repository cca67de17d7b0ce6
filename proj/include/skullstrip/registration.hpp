#pragma once

#include <vector>

#include <Eigen/Core>

#include "skullstrip/image.hpp"
#include "skullstrip/transform.hpp"

namespace skullstrip {

enum class Metric { mean_squares, normalized_correlation };

using ParameterVector = Eigen::Matrix<double, 12, 1>;

/// Scales for the 12 affine parameters (row-major matrix, then translation):
/// 1 for matrix entries, 1/100 per mm for translations.
ParameterVector default_parameter_scales();

struct RegistrationConfig {
  /// Subsampling factors, coarse to fine.
  std::vector<int> pyramid_factors{4, 2};
  Metric metric = Metric::normalized_correlation;
  int max_iterations_per_level = 200;
  /// Step lengths are measured in scaled parameter space (parameter * scale).
  double initial_step = 1.0;
  double min_step = 1e-3;
  double relaxation = 0.6;
  double sample_fraction = 1.0;
  /// Central-difference half-width for the metric gradient, in scaled units.
  double finite_difference_step = 3e-2;
  ParameterVector parameter_scales = default_parameter_scales();

  /// Throws ConfigError on out-of-range fields.
  void validate() const;
};

struct RegistrationResult {
  AffineTransform transform;
  double initial_metric = 0.0;
  double final_metric = 0.0;
  std::vector<int> iterations_used;
  std::vector<bool> converged;
};

/// Raised when too little of the fixed sample set maps inside the moving image.
class InsufficientOverlap : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMinimumOverlapFraction = 0.1;

/// Similarity of `fixed` and `moving` pulled through `t` (0 is a perfect
/// match). mean_squares: mean squared difference; normalized_correlation:
/// 1 - |Pearson r|. Samples whose pull-back leaves the moving grid are
/// dropped; throws InsufficientOverlap when fewer than 10% remain.
double metric_value(const Volume& fixed, const Volume& moving, const AffineTransform& t,
                    const RegistrationConfig& cfg);

/// Multi-resolution affine registration of `moving` (atlas) onto `fixed`
/// (patient) by regular-step gradient descent over the 12 affine
/// parameters. The returned transform maps fixed-space world points into
/// moving space. The matrix acts about the fixed volume's world center
/// during optimization; the result folds that centering back in.
RegistrationResult register_affine(const Volume& fixed, const Volume& moving,
                                   const RegistrationConfig& cfg,
                                   const AffineTransform& init = identity_transform());

/// Carries an atlas mask into `target` space: trilinear resampling of the
/// 0/1 mask through `t` (outside = 0), then a 0.5 threshold.
BinaryMask propagate_mask(const BinaryMask& atlas_mask, const AffineTransform& t,
                          const Geometry& target);

}  // namespace skullstrip
