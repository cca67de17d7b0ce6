#include "skullstrip/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>

#include "skullstrip/errors.hpp"
#include "skullstrip/filter.hpp"

namespace skullstrip {
namespace {

constexpr double kCurvatureEpsilon = 1e-8;

/// Central-difference derivatives of phi at an interior voxel.
struct LocalDerivatives {
  double dx, dy, dz;
  double dxx, dyy, dzz;
  double dxy, dxz, dyz;
};

class Stencil {
 public:
  explicit Stencil(const Volume& phi)
      : phi_(phi),
        stride_{1, phi.dims().x(), static_cast<std::ptrdiff_t>(phi.dims().x()) * phi.dims().y()},
        h_(phi.spacing()) {}

  double at(std::size_t n, std::ptrdiff_t offset) const {
    return phi_[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(n) + offset)];
  }

  double backward(std::size_t n, int a) const { return (at(n, 0) - at(n, -stride_[a])) / h_[a]; }
  double forward(std::size_t n, int a) const { return (at(n, stride_[a]) - at(n, 0)) / h_[a]; }

  LocalDerivatives derivatives(std::size_t n) const {
    LocalDerivatives d{};
    double* first[3] = {&d.dx, &d.dy, &d.dz};
    double* second[3] = {&d.dxx, &d.dyy, &d.dzz};
    const double c = at(n, 0);
    for (int a = 0; a < 3; ++a) {
      const double p = at(n, stride_[a]);
      const double m = at(n, -stride_[a]);
      *first[a] = (p - m) / (2.0 * h_[a]);
      *second[a] = (p - 2.0 * c + m) / (h_[a] * h_[a]);
    }
    d.dxy = cross(n, 0, 1);
    d.dxz = cross(n, 0, 2);
    d.dyz = cross(n, 1, 2);
    return d;
  }

  /// Numerator of the mean curvature, N = kappa * |grad phi|^3.
  static double curvature_numerator(const LocalDerivatives& d) {
    return d.dxx * (d.dy * d.dy + d.dz * d.dz) + d.dyy * (d.dx * d.dx + d.dz * d.dz) +
           d.dzz * (d.dx * d.dx + d.dy * d.dy) -
           2.0 * (d.dx * d.dy * d.dxy + d.dx * d.dz * d.dxz + d.dy * d.dz * d.dyz);
  }

 private:
  double cross(std::size_t n, int a, int b) const {
    const std::ptrdiff_t sa = stride_[a], sb = stride_[b];
    return (at(n, sa + sb) - at(n, sa - sb) - at(n, -sa + sb) + at(n, -sa - sb)) /
           (4.0 * h_[a] * h_[b]);
  }

  const Volume& phi_;
  std::ptrdiff_t stride_[3];
  Eigen::Vector3d h_;
};

bool interior(const Geometry& g, const Eigen::Vector3i& p) {
  return (p.array() >= 1).all() && (p.array() <= g.dims.array() - 2).all();
}

double percentile(std::vector<float> values, double q) {
  if (values.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(std::floor(q * (values.size() - 1)));
  std::nth_element(values.begin(), values.begin() + k, values.end());
  return values[k];
}

bool has_zero_crossing(const Volume& phi) {
  bool any_in = false, any_out = false;
  for (float x : phi.data()) {
    if (x <= 0)
      any_in = true;
    else
      any_out = true;
    if (any_in && any_out) return true;
  }
  return false;
}

}  // namespace

void EvolutionConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("evolution config: " + what); };
  if (!std::isfinite(alpha_balloon)) fail("alpha_balloon must be finite");
  if (!(beta_curvature >= 0) || !std::isfinite(beta_curvature)) fail("beta_curvature must be >= 0");
  if (!(gamma_advection >= 0) || !std::isfinite(gamma_advection)) fail("gamma_advection must be >= 0");
  if (!(sigma_mm > 0) || !std::isfinite(sigma_mm)) fail("sigma_mm must be > 0");
  if (!(edge_exponent >= 1) || !std::isfinite(edge_exponent)) fail("edge_exponent must be >= 1");
  if (edge_scale && (!(*edge_scale > 0) || !std::isfinite(*edge_scale)))
    fail("edge_scale must be > 0 or \"auto\"");
  if (!(cfl > 0 && cfl <= 1)) fail("cfl must be in (0, 1]");
  if (max_iterations < 0) fail("max_iterations must be >= 0");
  if (!(band_width_mm > 0) || !std::isfinite(band_width_mm)) fail("band_width_mm must be > 0");
  if (reinit_interval < 1) fail("reinit_interval must be >= 1");
  if (!(convergence_fraction >= 0 && convergence_fraction < 1))
    fail("convergence_fraction must be in [0, 1)");
}

EdgePotential edge_potential(const Volume& patient, const EvolutionConfig& cfg,
                             const BinaryMask* initial_mask) {
  cfg.validate();
  const Volume grad_mag = magnitude(index_gradient(gaussian_smooth(patient, cfg.sigma_mm)));

  double lambda;
  if (cfg.edge_scale) {
    lambda = *cfg.edge_scale;
  } else {
    std::vector<float> samples;
    if (initial_mask) {
      require_same_geometry(patient.geometry(), initial_mask->geometry(), "edge_potential");
      const BinaryMask region = dilate(*initial_mask, kAutoEdgeScaleDilationMm);
      for (std::size_t n = 0; n < region.size(); ++n)
        if (region[n]) samples.push_back(grad_mag[n]);
    } else {
      samples.assign(grad_mag.data().begin(), grad_mag.data().end());
    }
    lambda = percentile(std::move(samples), kAutoEdgeScalePercentile);
    if (!(lambda > 0))
      throw std::runtime_error(
          "edge potential: automatic edge_scale resolved to 0 (flat image); "
          "set evolution.edge_scale explicitly");
  }

  EdgePotential out{Volume(patient.geometry()), lambda};
  for (std::size_t n = 0; n < grad_mag.size(); ++n) {
    const double r = std::pow(grad_mag[n] / lambda, cfg.edge_exponent);
    out.g[n] = static_cast<float>(1.0 / (1.0 + r));
  }
  return out;
}

double curvature(const LevelSetField& field, const Eigen::Vector3i& voxel) {
  const Geometry& g = field.geometry();
  if (!interior(g, voxel))
    throw std::out_of_range("curvature: voxel must be at least one voxel from every face");
  const Stencil s(field.phi);
  const auto d = s.derivatives(g.linear_index(voxel.x(), voxel.y(), voxel.z()));
  const double norm = std::sqrt(d.dx * d.dx + d.dy * d.dy + d.dz * d.dz) + kCurvatureEpsilon;
  return Stencil::curvature_numerator(d) / (norm * norm * norm);
}

LevelSetField reinitialize(const LevelSetField& field) {
  if (!has_zero_crossing(field.phi))
    throw std::runtime_error("reinitialize: level set has no zero crossing");
  return signed_distance_from_mask(extract_mask(field, false));
}

EvolutionResult evolve(const LevelSetField& phi0, const EdgePotential& edge,
                       const EvolutionConfig& cfg, const EvolutionObserver& observer) {
  cfg.validate();
  require_same_geometry(phi0.geometry(), edge.g.geometry(), "evolve");
  const Geometry& geom = phi0.geometry();
  const Volume& g = edge.g;
  const VectorField grad_g = index_gradient(g);
  const double h_min = geom.min_spacing();
  const double total = static_cast<double>(geom.voxel_count());

  EvolutionResult result;
  Volume phi = phi0.phi;
  Volume next = phi;
  std::vector<std::size_t> band;
  std::vector<double> rate;
  int quiet_iterations = 0;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    band.clear();
    for (std::size_t n = 0; n < phi.size(); ++n) {
      if (std::abs(phi[n]) > cfg.band_width_mm) continue;
      if (!interior(geom, geom.grid_index(n))) continue;
      band.push_back(n);
    }

    const Stencil s(phi);
    rate.resize(band.size());
    double max_speed = 0.0;
    for (std::size_t b = 0; b < band.size(); ++b) {
      const std::size_t n = band[b];
      const double gn = g[n];
      double du = 0.0;

      if (cfg.alpha_balloon != 0.0) {
        const double speed = cfg.alpha_balloon * gn;
        double norm2 = 0.0;
        for (int a = 0; a < 3; ++a) {
          const double bm = s.backward(n, a), fp = s.forward(n, a);
          if (speed > 0)
            norm2 += std::pow(std::max(bm, 0.0), 2) + std::pow(std::min(fp, 0.0), 2);
          else
            norm2 += std::pow(std::min(bm, 0.0), 2) + std::pow(std::max(fp, 0.0), 2);
        }
        du -= speed * std::sqrt(norm2);
      }

      if (cfg.beta_curvature != 0.0) {
        const auto d = s.derivatives(n);
        const double norm = std::sqrt(d.dx * d.dx + d.dy * d.dy + d.dz * d.dz) + kCurvatureEpsilon;
        du += cfg.beta_curvature * gn * Stencil::curvature_numerator(d) / (norm * norm);
      }

      double grad_g_l1 = 0.0;
      if (cfg.gamma_advection != 0.0) {
        for (int a = 0; a < 3; ++a) {
          const double ga = grad_g.components[a][n];
          grad_g_l1 += std::abs(ga);
          if (ga > 0)
            du += cfg.gamma_advection * ga * s.forward(n, a);
          else if (ga < 0)
            du += cfg.gamma_advection * ga * s.backward(n, a);
        }
      }

      if (!std::isfinite(du)) {
        const auto p = geom.grid_index(n);
        throw std::runtime_error("evolve: non-finite update at voxel (" + std::to_string(p.x()) +
                                 ", " + std::to_string(p.y()) + ", " + std::to_string(p.z()) +
                                 ")");
      }
      rate[b] = du;
      const double bound = std::abs(cfg.alpha_balloon * gn) + cfg.gamma_advection * grad_g_l1 +
                           6.0 * cfg.beta_curvature * gn / h_min;
      max_speed = std::max(max_speed, bound);
    }

    const double dt = max_speed > 0 ? cfg.cfl * h_min / max_speed : 0.0;
    std::size_t sign_changes = 0;
    for (std::size_t b = 0; b < band.size(); ++b) {
      const std::size_t n = band[b];
      const float updated = static_cast<float>(phi[n] + dt * rate[b]);
      sign_changes += (phi[n] <= 0) != (updated <= 0);
      next[n] = updated;
    }

    result.elapsed_time += dt;
    result.iterations_used = it + 1;
    if (observer) observer({it, dt, result.elapsed_time, phi, next});
    for (std::size_t n : band) phi[n] = next[n];

    const double fraction = sign_changes / total;
    result.sign_change_history.push_back(fraction);
    quiet_iterations = fraction < cfg.convergence_fraction ? quiet_iterations + 1 : 0;
    if (quiet_iterations >= kConvergenceWindow) {
      result.converged = true;
      break;
    }
    if ((it + 1) % cfg.reinit_interval == 0 && it + 1 < cfg.max_iterations) {
      if (!has_zero_crossing(phi))
        throw std::runtime_error("evolve: the front left the volume (no zero crossing)");
      phi = reinitialize({std::move(phi)}).phi;
      next = phi;
    }
  }

  if (!has_zero_crossing(phi))
    throw std::runtime_error("evolve: the front left the volume (no zero crossing)");
  result.phi = reinitialize({std::move(phi)});
  return result;
}

BinaryMask largest_component(const BinaryMask& m) {
  const Geometry& geom = m.geometry();
  const auto& d = geom.dims;
  std::vector<int> label(m.size(), 0);
  std::vector<std::size_t> sizes{0};
  std::deque<std::size_t> queue;
  const std::ptrdiff_t stride[3] = {1, d.x(), static_cast<std::ptrdiff_t>(d.x()) * d.y()};

  for (std::size_t seed = 0; seed < m.size(); ++seed) {
    if (!m[seed] || label[seed]) continue;
    const int id = static_cast<int>(sizes.size());
    std::size_t count = 0;
    label[seed] = id;
    queue.push_back(seed);
    while (!queue.empty()) {
      const std::size_t n = queue.front();
      queue.pop_front();
      ++count;
      const auto p = geom.grid_index(n);
      for (int a = 0; a < 3; ++a)
        for (int dir : {-1, 1}) {
          const int q = p[a] + dir;
          if (q < 0 || q >= d[a]) continue;
          const std::size_t nb = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(n) + dir * stride[a]);
          if (m[nb] && !label[nb]) {
            label[nb] = id;
            queue.push_back(nb);
          }
        }
    }
    sizes.push_back(count);
  }

  // Components are numbered in order of their first voxel, so a strict
  // comparison keeps the earliest among equals.
  int best = 0;
  for (int id = 1; id < static_cast<int>(sizes.size()); ++id)
    if (sizes[id] > sizes[best]) best = id;

  BinaryMask out(geom);
  if (best == 0) return out;
  for (std::size_t n = 0; n < m.size(); ++n) out[n] = label[n] == best ? 1 : 0;
  return out;
}

BinaryMask extract_mask(const LevelSetField& field, bool keep_largest_component) {
  BinaryMask m(field.geometry());
  for (std::size_t n = 0; n < m.size(); ++n) m[n] = field.phi[n] <= 0 ? 1 : 0;
  return keep_largest_component ? largest_component(m) : m;
}

}  // namespace skullstrip
