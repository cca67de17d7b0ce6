#include "skullstrip/transform.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/LU>

namespace skullstrip {

Eigen::Matrix<double, 12, 1> AffineTransform::parameters() const {
  Eigen::Matrix<double, 12, 1> p;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) p[3 * r + c] = matrix(r, c);
  p.tail<3>() = translation;
  return p;
}

AffineTransform AffineTransform::from_parameters(const Eigen::Matrix<double, 12, 1>& p) {
  AffineTransform t;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) t.matrix(r, c) = p[3 * r + c];
  t.translation = p.tail<3>();
  return t;
}

AffineTransform compose(const AffineTransform& a, const AffineTransform& b) {
  return {a.matrix * b.matrix, a.matrix * b.translation + a.translation};
}

void require_invertible(const AffineTransform& t) {
  const double det = t.matrix.determinant();
  if (!(std::abs(det) > 1e-12))
    throw std::runtime_error("affine transform is singular (|det| <= 1e-12)");
}

AffineTransform invert(const AffineTransform& t) {
  require_invertible(t);
  const Eigen::Matrix3d inv = t.matrix.inverse();
  return {inv, -inv * t.translation};
}

AffineTransform make_affine(const Eigen::Vector3d& rotation_rad, const Eigen::Vector3d& scale,
                            const Eigen::Vector3d& translation, const Eigen::Vector3d& center) {
  const Eigen::Matrix3d rot =
      (Eigen::AngleAxisd(rotation_rad.z(), Eigen::Vector3d::UnitZ()) *
       Eigen::AngleAxisd(rotation_rad.y(), Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(rotation_rad.x(), Eigen::Vector3d::UnitX()))
          .toRotationMatrix();
  AffineTransform t;
  t.matrix = rot * scale.asDiagonal();
  t.translation = center - t.matrix * center + translation;
  return t;
}

void write_transform(std::ostream& out, const AffineTransform& t) {
  const auto p = t.parameters();
  char buf[64];
  for (int n = 0; n < 12; ++n) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", p[n]);
    out << buf;
  }
}

AffineTransform read_transform(std::istream& in) {
  Eigen::Matrix<double, 12, 1> p;
  std::string token;
  for (int n = 0; n < 12; ++n) {
    if (!(in >> token))
      throw std::runtime_error("transform file: expected 12 values, got " + std::to_string(n));
    std::size_t used = 0;
    try {
      p[n] = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size() || !std::isfinite(p[n]))
      throw std::runtime_error("transform file: bad number '" + token + "'");
  }
  if (in >> token) throw std::runtime_error("transform file: more than 12 values");
  return AffineTransform::from_parameters(p);
}

void save_transform(const AffineTransform& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write transform file " + path.string());
  write_transform(out, t);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

AffineTransform load_transform(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open transform file " + path.string());
  return read_transform(in);
}

}  // namespace skullstrip
