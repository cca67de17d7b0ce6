#include "skullstrip/image.hpp"

#include "skullstrip/errors.hpp"

#include <cmath>
#include <string>

namespace skullstrip {

void Geometry::validate() const {
  if ((dims.array() < 1).any())
    throw std::invalid_argument("volume dims must all be >= 1");
  if (!(spacing.array() > 0.0).all() || !spacing.allFinite())
    throw std::invalid_argument("volume spacing must all be > 0");
  if (!origin.allFinite())
    throw std::invalid_argument("volume origin must be finite");
  const Eigen::Matrix3d gram = direction.transpose() * direction;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() >= 1e-6)
    throw std::invalid_argument("volume direction columns must be orthonormal");
}

Eigen::Vector3d index_to_world(const Geometry& g, const Eigen::Vector3d& ijk) {
  return g.origin + g.direction * g.spacing.cwiseProduct(ijk);
}

Eigen::Vector3d world_to_index(const Geometry& g, const Eigen::Vector3d& xyz) {
  // direction is orthonormal, so its inverse is its transpose.
  return (g.direction.transpose() * (xyz - g.origin)).cwiseQuotient(g.spacing);
}

BinaryMask threshold(const Volume& v, float threshold) {
  BinaryMask m(v.geometry());
  for (std::size_t n = 0; n < v.size(); ++n) m[n] = v[n] >= threshold ? 1 : 0;
  return m;
}

std::size_t count_true(const BinaryMask& m) {
  std::size_t count = 0;
  for (auto b : m.data()) count += b != 0;
  return count;
}

void require_same_geometry(const Geometry& a, const Geometry& b, const char* what) {
  if (!(a == b)) throw GeometryMismatch(std::string(what) + ": geometry mismatch");
}

}  // namespace skullstrip
