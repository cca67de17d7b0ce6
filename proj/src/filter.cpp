#include "skullstrip/filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace skullstrip {

std::vector<double> gaussian_kernel(double sigma_voxels) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_voxels)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int n = -radius; n <= radius; ++n) {
    k[n + radius] = std::exp(-0.5 * n * n / (sigma_voxels * sigma_voxels));
    sum += k[n + radius];
  }
  for (auto& w : k) w /= sum;
  return k;
}

Volume gaussian_smooth(const Volume& v, double sigma_mm) {
  if (!(sigma_mm > 0)) throw std::invalid_argument("gaussian_smooth: sigma must be > 0");
  const auto& d = v.dims();
  std::vector<double> cur(v.data().begin(), v.data().end());
  std::vector<double> next(cur.size());

  const std::size_t stride[3] = {1, static_cast<std::size_t>(d.x()),
                                 static_cast<std::size_t>(d.x()) * d.y()};
  for (int axis = 0; axis < 3; ++axis) {
    const auto kernel = gaussian_kernel(sigma_mm / v.spacing()[axis]);
    const int radius = static_cast<int>(kernel.size() / 2);
    const int len = d[axis];
    const std::size_t step = stride[axis];
    for (std::size_t n = 0; n < cur.size(); ++n) {
      const int pos = v.geometry().grid_index(n)[axis];
      const std::size_t line_start = n - pos * step;
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        const int q = std::clamp(pos + t, 0, len - 1);
        acc += kernel[t + radius] * cur[line_start + q * step];
      }
      next[n] = acc;
    }
    std::swap(cur, next);
  }

  std::vector<float> out(cur.size());
  std::transform(cur.begin(), cur.end(), out.begin(), [](double x) { return static_cast<float>(x); });
  return Volume(v.geometry(), std::move(out));
}

VectorField index_gradient(const Volume& v) {
  const auto& g = v.geometry();
  const auto& d = g.dims;
  if ((d.array() < 2).any()) throw std::invalid_argument("gradient: dims must be >= 2 on each axis");

  VectorField f{g, {}};
  for (auto& c : f.components) c.assign(g.voxel_count(), 0.0f);
  const std::ptrdiff_t stride[3] = {1, d.x(), static_cast<std::ptrdiff_t>(d.x()) * d.y()};

  std::size_t n = 0;
  for (int k = 0; k < d.z(); ++k)
    for (int j = 0; j < d.y(); ++j)
      for (int i = 0; i < d.x(); ++i, ++n) {
        const int pos[3] = {i, j, k};
        for (int a = 0; a < 3; ++a) {
          const double h = g.spacing[a];
          const std::ptrdiff_t s = stride[a];
          double diff;
          if (pos[a] == 0)
            diff = (v[n + s] - v[n]) / h;
          else if (pos[a] == d[a] - 1)
            diff = (v[n] - v[n - s]) / h;
          else
            diff = (static_cast<double>(v[n + s]) - v[n - s]) / (2.0 * h);
          f.components[a][n] = static_cast<float>(diff);
        }
      }
  return f;
}

VectorField gradient(const Volume& v) {
  VectorField f = index_gradient(v);
  const Eigen::Matrix3d& dir = v.geometry().direction;
  if (dir == Eigen::Matrix3d::Identity()) return f;
  for (std::size_t n = 0; n < v.size(); ++n) {
    const Eigen::Vector3d gi(f.components[0][n], f.components[1][n], f.components[2][n]);
    const Eigen::Vector3d gw = dir * gi;
    for (int a = 0; a < 3; ++a) f.components[a][n] = static_cast<float>(gw[a]);
  }
  return f;
}

Volume magnitude(const VectorField& f) {
  Volume out(f.geometry);
  for (std::size_t n = 0; n < out.size(); ++n) {
    const double x = f.components[0][n], y = f.components[1][n], z = f.components[2][n];
    out[n] = static_cast<float>(std::sqrt(x * x + y * y + z * z));
  }
  return out;
}

}  // namespace skullstrip
