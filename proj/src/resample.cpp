#include "skullstrip/resample.hpp"

#include <cmath>
#include <stdexcept>

namespace skullstrip {
namespace {

double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < 1e-9 ? r : x;
}

}  // namespace

float sample_trilinear(const Volume& v, const Eigen::Vector3d& ijk, float outside) {
  const auto& dims = v.dims();
  int base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(ijk[a])) return outside;
    const double fl = std::floor(ijk[a]);
    base[a] = static_cast<int>(fl);
    frac[a] = ijk[a] - fl;
    const int last = frac[a] > 0.0 ? base[a] + 1 : base[a];
    if (base[a] < 0 || last > dims[a] - 1) return outside;
  }

  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    const double wz = dz ? frac[2] : 1.0 - frac[2];
    if (wz == 0.0) continue;
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? frac[1] : 1.0 - frac[1];
      if (wy == 0.0) continue;
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? frac[0] : 1.0 - frac[0];
        if (wx == 0.0) continue;
        acc += wz * wy * wx * v(base[0] + dx, base[1] + dy, base[2] + dz);
      }
    }
  }
  return static_cast<float>(acc);
}

float sample_nearest(const Volume& v, const Eigen::Vector3d& ijk, float outside) {
  int idx[3];
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(ijk[a])) return outside;
    idx[a] = static_cast<int>(std::floor(ijk[a] + 0.5));
  }
  if (!v.geometry().contains(idx[0], idx[1], idx[2])) return outside;
  return v(idx[0], idx[1], idx[2]);
}

IndexMap::IndexMap(const Geometry& target, const Geometry& source, const AffineTransform& t) {
  const Eigen::Matrix3d to_source_index =
      source.spacing.cwiseInverse().asDiagonal() * source.direction.transpose();
  linear = to_source_index * t.matrix * index_to_world_matrix(target);
  offset = to_source_index * (t.matrix * target.origin + t.translation - source.origin);
}

Eigen::Vector3d IndexMap::operator()(const Eigen::Vector3d& ijk) const {
  const Eigen::Vector3d p = linear * ijk + offset;
  return {snap(p.x()), snap(p.y()), snap(p.z())};
}

Volume resample(const Volume& src, const Geometry& target, const AffineTransform& t,
                Interpolation interp, float outside) {
  require_invertible(t);
  Volume out(target);
  const IndexMap map(target, src.geometry(), t);
  const auto& d = target.dims;
  std::size_t n = 0;
  for (int k = 0; k < d.z(); ++k)
    for (int j = 0; j < d.y(); ++j)
      for (int i = 0; i < d.x(); ++i, ++n) {
        const Eigen::Vector3d p = map(Eigen::Vector3d(i, j, k));
        out[n] = interp == Interpolation::trilinear ? sample_trilinear(src, p, outside)
                                                    : sample_nearest(src, p, outside);
      }
  return out;
}

Volume downsample(const Volume& v, const Eigen::Vector3i& factor) {
  if ((factor.array() < 1).any()) throw std::invalid_argument("downsample factor must be >= 1");
  const Geometry& g = v.geometry();
  if ((factor.array() == 1).all()) return v;

  Geometry out_geom = g;
  for (int a = 0; a < 3; ++a) {
    out_geom.dims[a] = (g.dims[a] + factor[a] - 1) / factor[a];
    out_geom.spacing[a] = g.spacing[a] * factor[a];
  }
  const Eigen::Vector3d first_center = (factor.cast<double>().array() - 1.0) / 2.0;
  out_geom.origin = index_to_world(g, first_center);

  Volume out(out_geom);
  const auto& od = out_geom.dims;
  for (int k = 0; k < od.z(); ++k)
    for (int j = 0; j < od.y(); ++j)
      for (int i = 0; i < od.x(); ++i) {
        double sum = 0.0;
        int count = 0;
        const int k1 = std::min(g.dims.z(), (k + 1) * factor.z());
        const int j1 = std::min(g.dims.y(), (j + 1) * factor.y());
        const int i1 = std::min(g.dims.x(), (i + 1) * factor.x());
        for (int kk = k * factor.z(); kk < k1; ++kk)
          for (int jj = j * factor.y(); jj < j1; ++jj)
            for (int ii = i * factor.x(); ii < i1; ++ii) {
              sum += v(ii, jj, kk);
              ++count;
            }
        out(i, j, k) = static_cast<float>(sum / count);
      }
  return out;
}

}  // namespace skullstrip
