#include "skullstrip/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "skullstrip/distance.hpp"

namespace skullstrip {

DiceReport dice(const BinaryMask& a, const BinaryMask& b) {
  require_same_geometry(a.geometry(), b.geometry(), "dice");
  DiceReport r;
  for (std::size_t n = 0; n < a.size(); ++n) {
    const bool in_a = a[n] != 0, in_b = b[n] != 0;
    r.true_voxels_a += in_a;
    r.true_voxels_b += in_b;
    r.intersection += in_a && in_b;
  }
  const std::size_t denom = r.true_voxels_a + r.true_voxels_b;
  r.dice = denom == 0 ? 1.0 : 2.0 * static_cast<double>(r.intersection) / static_cast<double>(denom);
  return r;
}

BinaryMask boundary_voxels(const BinaryMask& m) {
  const Geometry& g = m.geometry();
  BinaryMask out(g);
  const auto& d = g.dims;
  for (int k = 0; k < d.z(); ++k)
    for (int j = 0; j < d.y(); ++j)
      for (int i = 0; i < d.x(); ++i) {
        if (!m(i, j, k)) continue;
        const int nb[6][3] = {{i - 1, j, k}, {i + 1, j, k}, {i, j - 1, k},
                              {i, j + 1, k}, {i, j, k - 1}, {i, j, k + 1}};
        for (const auto& q : nb) {
          if (!g.contains(q[0], q[1], q[2]) || !m(q[0], q[1], q[2])) {
            out(i, j, k) = 1;
            break;
          }
        }
      }
  return out;
}

SurfaceDistance boundary_distance_stats(const BinaryMask& a, const BinaryMask& b) {
  require_same_geometry(a.geometry(), b.geometry(), "boundary_distance_stats");
  if (count_true(a) == 0 || count_true(b) == 0)
    throw std::invalid_argument("boundary_distance_stats: masks must be nonempty");

  const BinaryMask surf_a = boundary_voxels(a);
  const BinaryMask surf_b = boundary_voxels(b);
  const auto to_a = squared_distance_transform(surf_a);
  const auto to_b = squared_distance_transform(surf_b);

  SurfaceDistance s;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (surf_a[n]) {
      const double dist = std::sqrt(to_b[n]);
      sum += dist;
      s.max_mm = std::max(s.max_mm, dist);
      ++count;
    }
    if (surf_b[n]) {
      const double dist = std::sqrt(to_a[n]);
      sum += dist;
      s.max_mm = std::max(s.max_mm, dist);
      ++count;
    }
  }
  s.mean_mm = sum / static_cast<double>(count);
  return s;
}

}  // namespace skullstrip
