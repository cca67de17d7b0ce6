#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace skullstrip {

/// Physical placement of a voxel grid. Voxel values live at voxel centers;
/// world = origin + direction * (spacing .* index), as in the NIfTI sform.
struct Geometry {
  Eigen::Vector3i dims = Eigen::Vector3i::Ones();
  Eigen::Vector3d spacing = Eigen::Vector3d::Ones();
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Matrix3d direction = Eigen::Matrix3d::Identity();

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims.x()) * dims.y() * dims.z();
  }

  std::size_t linear_index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims.y() + j) * dims.x() + i;
  }

  Eigen::Vector3i grid_index(std::size_t linear) const {
    const auto nx = static_cast<std::size_t>(dims.x());
    const auto ny = static_cast<std::size_t>(dims.y());
    return {static_cast<int>(linear % nx), static_cast<int>((linear / nx) % ny),
            static_cast<int>(linear / (nx * ny))};
  }

  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims.x() && j < dims.y() && k < dims.z();
  }

  double min_spacing() const { return spacing.minCoeff(); }

  /// Throws std::invalid_argument when dims/spacing/direction are malformed.
  void validate() const;

  friend bool operator==(const Geometry& a, const Geometry& b) {
    return a.dims == b.dims && a.spacing == b.spacing && a.origin == b.origin &&
           a.direction == b.direction;
  }
};

/// Continuous index -> world (mm).
Eigen::Vector3d index_to_world(const Geometry& g, const Eigen::Vector3d& ijk);
/// World (mm) -> continuous index; exact inverse of index_to_world.
Eigen::Vector3d world_to_index(const Geometry& g, const Eigen::Vector3d& xyz);

/// Affine map taking a continuous index to world coordinates, as a 3x3 + offset pair.
inline Eigen::Matrix3d index_to_world_matrix(const Geometry& g) {
  return g.direction * g.spacing.asDiagonal();
}

/// Dense scalar grid with physical geometry, x-fastest layout.
template <typename T>
class Image {
 public:
  using Scalar = T;

  Image() = default;

  explicit Image(Geometry geometry, T fill = T{})
      : geometry_(std::move(geometry)) {
    geometry_.validate();
    data_.assign(geometry_.voxel_count(), fill);
  }

  Image(Geometry geometry, std::vector<T> data)
      : geometry_(std::move(geometry)), data_(std::move(data)) {
    geometry_.validate();
    if (data_.size() != geometry_.voxel_count())
      throw std::invalid_argument("image data length does not match dims");
  }

  const Geometry& geometry() const { return geometry_; }
  const Eigen::Vector3i& dims() const { return geometry_.dims; }
  const Eigen::Vector3d& spacing() const { return geometry_.spacing; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator[](std::size_t n) { return data_[n]; }
  const T& operator[](std::size_t n) const { return data_[n]; }

  T& operator()(int i, int j, int k) { return data_[geometry_.linear_index(i, j, k)]; }
  const T& operator()(int i, int j, int k) const {
    return data_[geometry_.linear_index(i, j, k)];
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  const std::vector<T>& values() const { return data_; }

 private:
  Geometry geometry_;
  std::vector<T> data_;
};

using Volume = Image<float>;
/// Boolean grid stored as 0/1 bytes.
using BinaryMask = Image<std::uint8_t>;

/// World-space gradient field (per mm), one array per world axis.
struct VectorField {
  Geometry geometry;
  std::array<std::vector<float>, 3> components;
};

template <typename To, typename From>
Image<To> image_cast(const Image<From>& src) {
  std::vector<To> out(src.size());
  for (std::size_t n = 0; n < src.size(); ++n) out[n] = static_cast<To>(src[n]);
  return Image<To>(src.geometry(), std::move(out));
}

/// Float volume holding 1 where the mask is set, 0 elsewhere.
inline Volume mask_to_volume(const BinaryMask& m) { return image_cast<float>(m); }

/// Mask of voxels with value >= threshold.
BinaryMask threshold(const Volume& v, float threshold);

std::size_t count_true(const BinaryMask& m);

/// Throws GeometryMismatch unless both geometries match exactly.
void require_same_geometry(const Geometry& a, const Geometry& b, const char* what);

}  // namespace skullstrip
