#include "skullstrip/registration.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "skullstrip/errors.hpp"
#include "skullstrip/resample.hpp"

namespace skullstrip {
namespace {

/// Fixed-image sample set bound to one moving image; evaluates the metric
/// for any transform. Samples are visited in fixed linear order so every
/// sum is accumulated in the same sequence on every call.
class MetricEvaluator {
 public:
  MetricEvaluator(const Volume& fixed, const Volume& moving, const RegistrationConfig& cfg)
      : fixed_(fixed), moving_(moving), metric_(cfg.metric) {
    const auto& d = fixed.dims();
    const double f = cfg.sample_fraction;
    std::size_t n = 0;
    for (int k = 0; k < d.z(); ++k)
      for (int j = 0; j < d.y(); ++j)
        for (int i = 0; i < d.x(); ++i, ++n) {
          if (std::floor((n + 1) * f) <= std::floor(n * f)) continue;
          points_.emplace_back(i, j, k);
          values_.push_back(fixed[n]);
        }
  }

  double operator()(const AffineTransform& t) const {
    const IndexMap map(fixed_.geometry(), moving_.geometry(), t);
    const float nan = std::numeric_limits<float>::quiet_NaN();

    std::size_t valid = 0;
    double sum_f = 0, sum_m = 0, sum_ff = 0, sum_mm = 0, sum_fm = 0, sum_sq = 0;
    for (std::size_t s = 0; s < points_.size(); ++s) {
      const float m = sample_trilinear(moving_, map(points_[s]), nan);
      if (std::isnan(m)) continue;
      const double fv = values_[s];
      const double mv = m;
      ++valid;
      if (metric_ == Metric::mean_squares) {
        sum_sq += (fv - mv) * (fv - mv);
      } else {
        sum_f += fv;
        sum_m += mv;
        sum_ff += fv * fv;
        sum_mm += mv * mv;
        sum_fm += fv * mv;
      }
    }

    if (points_.empty() || valid < kMinimumOverlapFraction * points_.size())
      throw InsufficientOverlap("registration: fewer than 10% of samples overlap the moving image");

    const double count = static_cast<double>(valid);
    if (metric_ == Metric::mean_squares) return sum_sq / count;
    const double var_f = sum_ff - sum_f * sum_f / count;
    const double var_m = sum_mm - sum_m * sum_m / count;
    if (!(var_f > 0) || !(var_m > 0)) return 1.0;
    const double cov = sum_fm - sum_f * sum_m / count;
    return 1.0 - std::abs(cov / std::sqrt(var_f * var_m));
  }

 private:
  const Volume& fixed_;
  const Volume& moving_;
  Metric metric_;
  std::vector<Eigen::Vector3d> points_;
  std::vector<float> values_;
};

/// Parameters relative to a center c: x' = M (x - c) + c + t_c, stored in
/// scaled units u = theta * scale.
class CenteredParameterization {
 public:
  CenteredParameterization(const Eigen::Vector3d& center, const ParameterVector& scales)
      : center_(center), scales_(scales) {}

  ParameterVector to_scaled(const AffineTransform& t) const {
    ParameterVector theta = t.parameters();
    theta.tail<3>() = t.translation - center_ + t.matrix * center_;
    return theta.cwiseProduct(scales_);
  }

  AffineTransform from_scaled(const ParameterVector& u) const {
    const ParameterVector theta = u.cwiseQuotient(scales_);
    AffineTransform t = AffineTransform::from_parameters(theta);
    t.translation = theta.tail<3>() + center_ - t.matrix * center_;
    return t;
  }

 private:
  Eigen::Vector3d center_;
  ParameterVector scales_;
};

double checked(double value) {
  if (!std::isfinite(value)) throw std::runtime_error("registration: metric is not finite");
  return value;
}

}  // namespace

ParameterVector default_parameter_scales() {
  ParameterVector s = ParameterVector::Ones();
  s.tail<3>().setConstant(1.0 / 100.0);
  return s;
}

void RegistrationConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("registration config: " + what); };
  if (pyramid_factors.empty()) fail("pyramid_factors must not be empty");
  for (std::size_t n = 0; n < pyramid_factors.size(); ++n) {
    if (pyramid_factors[n] < 1) fail("pyramid_factors must be >= 1");
    if (n > 0 && pyramid_factors[n] > pyramid_factors[n - 1])
      fail("pyramid_factors must be non-increasing");
  }
  if (max_iterations_per_level < 0) fail("max_iterations_per_level must be >= 0");
  if (!(initial_step > 0) || !std::isfinite(initial_step)) fail("initial_step must be > 0");
  if (!(min_step > 0) || !std::isfinite(min_step)) fail("min_step must be > 0");
  if (!(relaxation > 0 && relaxation < 1)) fail("relaxation must be in (0, 1)");
  if (!(sample_fraction > 0 && sample_fraction <= 1)) fail("sample_fraction must be in (0, 1]");
  if (!(finite_difference_step > 0) || !std::isfinite(finite_difference_step))
    fail("finite_difference_step must be > 0");
  if (!(parameter_scales.array() > 0).all() || !parameter_scales.allFinite())
    fail("parameter_scales must be > 0");
}

double metric_value(const Volume& fixed, const Volume& moving, const AffineTransform& t,
                    const RegistrationConfig& cfg) {
  cfg.validate();
  require_invertible(t);
  return MetricEvaluator(fixed, moving, cfg)(t);
}

RegistrationResult register_affine(const Volume& fixed, const Volume& moving,
                                   const RegistrationConfig& cfg, const AffineTransform& init) {
  cfg.validate();
  require_invertible(init);

  const Eigen::Vector3d center =
      index_to_world(fixed.geometry(), (fixed.dims().cast<double>().array() - 1.0) / 2.0);
  const CenteredParameterization params(center, cfg.parameter_scales);

  RegistrationResult result;
  ParameterVector u = params.to_scaled(init);
  Volume level_fixed, level_moving;

  for (const int factor : cfg.pyramid_factors) {
    const Eigen::Vector3i f = Eigen::Vector3i::Constant(factor);
    level_fixed = downsample(fixed, f);
    level_moving = downsample(moving, f);
    const MetricEvaluator metric(level_fixed, level_moving, cfg);

    // Metric at a probe point, or nothing when the probe loses overlap.
    const auto probe = [&](const ParameterVector& v) -> std::optional<double> {
      try {
        return checked(metric(params.from_scaled(v)));
      } catch (const InsufficientOverlap&) {
        return std::nullopt;
      }
    };
    double value = checked(metric(params.from_scaled(u)));
    double step = cfg.initial_step;
    ParameterVector previous_direction = ParameterVector::Zero();
    ParameterVector grad;
    bool have_gradient = false;
    bool converged = false;
    int iterations = 0;

    while (iterations < cfg.max_iterations_per_level) {
      if (step < cfg.min_step) {
        converged = true;
        break;
      }
      ++iterations;
      if (!have_gradient) {
        const double h = cfg.finite_difference_step;
        for (int p = 0; p < 12; ++p) {
          ParameterVector up = u, down = u;
          up[p] += h;
          down[p] -= h;
          const std::optional<double> above = probe(up), below = probe(down);
          if (above && below)
            grad[p] = (*above - *below) / (2.0 * h);
          else if (above)
            grad[p] = (*above - value) / h;
          else if (below)
            grad[p] = (value - *below) / h;
          else
            grad[p] = 0.0;
        }
        have_gradient = true;
        const double norm = grad.norm();
        if (!(norm > 0)) {
          converged = true;
          break;
        }
        const ParameterVector direction = -grad / norm;
        if (direction.dot(previous_direction) < 0) step *= cfg.relaxation;
        previous_direction = direction;
        if (step < cfg.min_step) {
          converged = true;
          break;
        }
      }

      const ParameterVector trial = u + step * previous_direction;
      double trial_value = std::numeric_limits<double>::infinity();
      try {
        const AffineTransform t = params.from_scaled(trial);
        if (std::abs(t.matrix.determinant()) > 1e-12) trial_value = checked(metric(t));
      } catch (const InsufficientOverlap&) {
      }
      if (trial_value < value) {
        u = trial;
        value = trial_value;
        have_gradient = false;
      } else {
        step *= cfg.relaxation;
      }
    }
    if (!converged && step < cfg.min_step) converged = true;
    result.iterations_used.push_back(iterations);
    result.converged.push_back(converged);
  }

  // Monotone acceptance at the finest level.
  const MetricEvaluator finest(level_fixed, level_moving, cfg);
  result.initial_metric = checked(finest(init));
  result.transform = params.from_scaled(u);
  result.final_metric = checked(finest(result.transform));
  if (result.final_metric > result.initial_metric) {
    result.transform = init;
    result.final_metric = result.initial_metric;
  }
  return result;
}

BinaryMask propagate_mask(const BinaryMask& atlas_mask, const AffineTransform& t,
                          const Geometry& target) {
  const Volume carried =
      resample(mask_to_volume(atlas_mask), target, t, Interpolation::trilinear, 0.0f);
  return threshold(carried, 0.5f);
}

}  // namespace skullstrip
