#include "skullstrip/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace skullstrip {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// One-dimensional squared distance transform of the sampled function `f`
/// with sample spacing `h` (Felzenszwalb & Huttenlocher). Infinite samples
/// contribute no parabola.
void distance_1d(const std::vector<double>& f, double h, std::vector<double>& out,
                 std::vector<int>& vertex, std::vector<double>& boundary) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    const double pq = q * h;
    while (k >= 0) {
      const double pv = vertex[k] * h;
      const double s = ((f[q] + pq * pq) - (f[vertex[k]] + pv * pv)) / (2.0 * (pq - pv));
      if (s <= boundary[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    vertex[k] = q;
    if (k == 0) {
      boundary[k] = -kInf;
    } else {
      const double pv = vertex[k - 1] * h;
      boundary[k] =
          ((f[q] + pq * pq) - (f[vertex[k - 1]] + pv * pv)) / (2.0 * (pq - pv));
    }
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    const double pq = q * h;
    while (j < k && boundary[j + 1] < pq) ++j;
    const double diff = (q - vertex[j]) * h;
    out[q] = diff * diff + f[vertex[j]];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(const BinaryMask& features) {
  const Geometry& g = features.geometry();
  const auto& d = g.dims;
  std::vector<double> dist(g.voxel_count());
  for (std::size_t n = 0; n < dist.size(); ++n) dist[n] = features[n] ? 0.0 : kInf;

  const std::size_t stride[3] = {1, static_cast<std::size_t>(d.x()),
                                 static_cast<std::size_t>(d.x()) * d.y()};
  const int max_len = d.maxCoeff();
  std::vector<double> line(max_len), out(max_len), boundary(max_len + 1);
  std::vector<int> vertex(max_len);

  for (int axis = 0; axis < 3; ++axis) {
    const int len = d[axis];
    const int u = (axis + 1) % 3, w = (axis + 2) % 3;
    line.resize(len);
    out.resize(len);
    for (int b = 0; b < d[w]; ++b)
      for (int a = 0; a < d[u]; ++a) {
        const std::size_t start = a * stride[u] + b * stride[w];
        for (int q = 0; q < len; ++q) line[q] = dist[start + q * stride[axis]];
        distance_1d(line, g.spacing[axis], out, vertex, boundary);
        for (int q = 0; q < len; ++q) dist[start + q * stride[axis]] = out[q];
      }
  }
  return dist;
}

LevelSetField signed_distance_from_mask(const BinaryMask& m) {
  const std::size_t inside = count_true(m);
  if (inside == 0) throw std::invalid_argument("signed distance: mask is empty");
  if (inside == m.size()) throw std::invalid_argument("signed distance: mask is full");

  BinaryMask outside_mask(m.geometry());
  for (std::size_t n = 0; n < m.size(); ++n) outside_mask[n] = m[n] ? 0 : 1;

  const auto to_inside = squared_distance_transform(m);
  const auto to_outside = squared_distance_transform(outside_mask);
  const double half = 0.5 * m.geometry().min_spacing();

  Volume phi(m.geometry());
  for (std::size_t n = 0; n < m.size(); ++n) {
    phi[n] = m[n] ? static_cast<float>(-(std::sqrt(to_outside[n]) - half))
                  : static_cast<float>(std::sqrt(to_inside[n]) - half);
  }
  return {std::move(phi)};
}

BinaryMask dilate(const BinaryMask& m, double radius_mm) {
  BinaryMask out(m.geometry());
  const auto dist = squared_distance_transform(m);
  const double r2 = radius_mm * radius_mm;
  for (std::size_t n = 0; n < m.size(); ++n) out[n] = dist[n] <= r2 ? 1 : 0;
  return out;
}

}  // namespace skullstrip
