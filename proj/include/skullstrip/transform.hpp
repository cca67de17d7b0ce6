#pragma once

#include <filesystem>
#include <iosfwd>

#include <Eigen/Core>
#include <Eigen/LU>

namespace skullstrip {

/// World-space affine map x -> matrix * x + translation (mm to mm).
///
/// In registration and resampling the transform maps a point of the fixed
/// (output) grid into the moving (source) image, i.e. the output pulls.
struct AffineTransform {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  /// Row-major matrix entries followed by the translation.
  Eigen::Matrix<double, 12, 1> parameters() const;
  static AffineTransform from_parameters(const Eigen::Matrix<double, 12, 1>& p);
};

inline AffineTransform identity_transform() { return {}; }

inline Eigen::Vector3d apply_point(const AffineTransform& t, const Eigen::Vector3d& p) {
  return t.matrix * p + t.translation;
}

/// compose(a, b)(p) == a(b(p)).
AffineTransform compose(const AffineTransform& a, const AffineTransform& b);

/// Throws std::runtime_error when |det| <= 1e-12.
AffineTransform invert(const AffineTransform& t);

/// Throws std::runtime_error when |det| <= 1e-12.
void require_invertible(const AffineTransform& t);

/// Rotation (radians, applied x then y then z) and per-axis scale about
/// `center`, followed by a translation.
AffineTransform make_affine(const Eigen::Vector3d& rotation_rad, const Eigen::Vector3d& scale,
                            const Eigen::Vector3d& translation,
                            const Eigen::Vector3d& center = Eigen::Vector3d::Zero());

// Transform text files hold 12 numbers, one per line: the 3x3 matrix in
// row-major order, then the translation, each with 17 significant digits.
void write_transform(std::ostream& out, const AffineTransform& t);
AffineTransform read_transform(std::istream& in);
void save_transform(const AffineTransform& t, const std::filesystem::path& path);
AffineTransform load_transform(const std::filesystem::path& path);

}  // namespace skullstrip
