#include "skullstrip/nifti.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include <Eigen/SVD>

namespace skullstrip {
namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kWriteOffset = 352;

enum Offset : std::size_t {
  kSizeofHdr = 0,
  kDim = 40,
  kDatatype = 70,
  kBitpix = 72,
  kPixdim = 76,
  kVoxOffset = 108,
  kSclSlope = 112,
  kSclInter = 116,
  kXyztUnits = 123,
  kDescrip = 148,
  kQformCode = 252,
  kSformCode = 254,
  kQuatern = 256,
  kQoffset = 268,
  kSrow = 280,
  kMagic = 344,
};

enum Datatype : int { kUint8 = 2, kInt16 = 4, kFloat32 = 16, kFloat64 = 64 };

/// Byte-order aware view of a raw header.
class HeaderReader {
 public:
  HeaderReader(const std::array<char, kHeaderSize>& bytes, bool swap)
      : bytes_(bytes), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    std::array<char, sizeof(T)> raw;
    std::memcpy(raw.data(), bytes_.data() + offset, sizeof(T));
    if (swap_) std::reverse(raw.begin(), raw.end());
    return std::bit_cast<T>(raw);
  }

 private:
  const std::array<char, kHeaderSize>& bytes_;
  bool swap_;
};

template <typename T>
void put(std::array<char, kWriteOffset>& bytes, std::size_t offset, T value) {
  static_assert(std::endian::native == std::endian::little,
                "writer assumes a little-endian host");
  std::memcpy(bytes.data() + offset, &value, sizeof(T));
}

template <typename T>
T read_swapped(const char* p, bool swap) {
  std::array<char, sizeof(T)> raw;
  std::memcpy(raw.data(), p, sizeof(T));
  if (swap) std::reverse(raw.begin(), raw.end());
  return std::bit_cast<T>(raw);
}

/// Nearest orthonormal matrix; float-rounded headers are never exactly orthonormal.
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

Geometry geometry_from_header(const HeaderReader& h, const Eigen::Vector3i& dims) {
  Geometry g;
  g.dims = dims;
  const auto pixdim = [&](int n) { return static_cast<double>(h.get<float>(kPixdim + 4 * n)); };
  const short sform_code = h.get<short>(kSformCode);
  const short qform_code = h.get<short>(kQformCode);

  if (sform_code > 0) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m(r, c) = h.get<float>(kSrow + 16 * r + 4 * c);
      g.origin[r] = h.get<float>(kSrow + 16 * r + 12);
    }
    g.spacing = m.colwise().norm().transpose();
    if (!(g.spacing.array() > 0).all()) throw std::runtime_error("nifti: degenerate sform");
    g.direction = orthonormalize(m * g.spacing.cwiseInverse().asDiagonal());
  } else if (qform_code > 0) {
    const double b = h.get<float>(kQuatern);
    const double c = h.get<float>(kQuatern + 4);
    const double d = h.get<float>(kQuatern + 8);
    const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
    Eigen::Matrix3d r;
    r << a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c),
        2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b),
        2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b;
    const double qfac = pixdim(0) < 0 ? -1.0 : 1.0;
    r.col(2) *= qfac;
    g.direction = orthonormalize(r);
    g.spacing = {std::abs(pixdim(1)), std::abs(pixdim(2)), std::abs(pixdim(3))};
    for (int n = 0; n < 3; ++n) g.origin[n] = h.get<float>(kQoffset + 4 * n);
  } else {
    g.spacing = {std::abs(pixdim(1)), std::abs(pixdim(2)), std::abs(pixdim(3))};
  }
  // Some writers leave pixdim zero for unused axes.
  for (int n = 0; n < 3; ++n)
    if (!(g.spacing[n] > 0)) g.spacing[n] = 1.0;
  return g;
}

}  // namespace

Volume load_nifti(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("nifti: cannot open " + path.string());

  std::array<char, kHeaderSize> bytes{};
  if (!in.read(bytes.data(), kHeaderSize))
    throw std::runtime_error("nifti: truncated header in " + path.string());

  const auto sizeof_hdr = read_swapped<std::int32_t>(bytes.data(), false);
  bool swap = false;
  if (sizeof_hdr != 348) {
    if (read_swapped<std::int32_t>(bytes.data(), true) != 348)
      throw std::runtime_error("nifti: sizeof_hdr is not 348 in " + path.string());
    swap = true;
  }
  if (std::memcmp(bytes.data() + kMagic, "n+1\0", 4) != 0)
    throw std::runtime_error("nifti: bad magic (expected single-file n+1) in " + path.string());

  const HeaderReader h(bytes, swap);
  if (h.get<short>(kDim) != 3)
    throw std::runtime_error("nifti: only 3-D volumes are supported (dim[0] != 3)");
  const Eigen::Vector3i dims(h.get<short>(kDim + 2), h.get<short>(kDim + 4), h.get<short>(kDim + 6));
  if ((dims.array() < 1).any()) throw std::runtime_error("nifti: non-positive dimension");

  const int datatype = h.get<short>(kDatatype);
  std::size_t bytes_per_voxel = 0;
  switch (datatype) {
    case kUint8: bytes_per_voxel = 1; break;
    case kInt16: bytes_per_voxel = 2; break;
    case kFloat32: bytes_per_voxel = 4; break;
    case kFloat64: bytes_per_voxel = 8; break;
    default:
      throw std::runtime_error("nifti: unsupported datatype " + std::to_string(datatype));
  }

  Geometry geometry = geometry_from_header(h, dims);
  try {
    geometry.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("nifti: ") + e.what());
  }

  const float vox_offset = h.get<float>(kVoxOffset);
  if (!(vox_offset >= 0)) throw std::runtime_error("nifti: negative vox_offset");
  const std::size_t n = geometry.voxel_count();
  std::vector<char> raw(n * bytes_per_voxel);
  in.seekg(static_cast<std::streamoff>(vox_offset));
  if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size())))
    throw std::runtime_error("nifti: truncated voxel data in " + path.string());

  std::vector<float> data(n);
  for (std::size_t v = 0; v < n; ++v) {
    const char* p = raw.data() + v * bytes_per_voxel;
    switch (datatype) {
      case kUint8: data[v] = static_cast<unsigned char>(*p); break;
      case kInt16: data[v] = read_swapped<std::int16_t>(p, swap); break;
      case kFloat32: data[v] = read_swapped<float>(p, swap); break;
      case kFloat64: data[v] = static_cast<float>(read_swapped<double>(p, swap)); break;
    }
  }

  const float slope = h.get<float>(kSclSlope);
  const float inter = h.get<float>(kSclInter);
  const bool identity = slope == 1.0f && inter == 0.0f;
  if (slope != 0.0f && !identity && std::isfinite(slope) && std::isfinite(inter)) {
    for (auto& x : data) x = slope * x + inter;
  }
  return Volume(std::move(geometry), std::move(data));
}

void save_nifti(const Volume& v, const std::filesystem::path& path) {
  const Geometry& g = v.geometry();
  if ((g.dims.array() > 32767).any())
    throw std::runtime_error("nifti: dimension exceeds int16 range");

  std::array<char, kWriteOffset> header{};
  put<std::int32_t>(header, kSizeofHdr, 348);
  const std::array<short, 8> dim{3, static_cast<short>(g.dims.x()), static_cast<short>(g.dims.y()),
                                 static_cast<short>(g.dims.z()), 1, 1, 1, 1};
  for (int n = 0; n < 8; ++n) put<short>(header, kDim + 2 * n, dim[n]);
  put<short>(header, kDatatype, kFloat32);
  put<short>(header, kBitpix, 32);
  const std::array<float, 8> pixdim{1.0f, static_cast<float>(g.spacing.x()),
                                    static_cast<float>(g.spacing.y()),
                                    static_cast<float>(g.spacing.z()), 1, 1, 1, 1};
  for (int n = 0; n < 8; ++n) put<float>(header, kPixdim + 4 * n, pixdim[n]);
  put<float>(header, kVoxOffset, static_cast<float>(kWriteOffset));
  put<float>(header, kSclSlope, 1.0f);
  put<float>(header, kSclInter, 0.0f);
  header[kXyztUnits] = 2;  // mm
  const char descrip[] = "skullstrip";
  std::memcpy(header.data() + kDescrip, descrip, sizeof(descrip) - 1);
  put<short>(header, kQformCode, 0);
  put<short>(header, kSformCode, 1);
  const Eigen::Matrix3d m = index_to_world_matrix(g);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) put<float>(header, kSrow + 16 * r + 4 * c, static_cast<float>(m(r, c)));
    put<float>(header, kSrow + 16 * r + 12, static_cast<float>(g.origin[r]));
  }
  std::memcpy(header.data() + kMagic, "n+1\0", 4);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("nifti: cannot write " + path.string());
  out.write(header.data(), header.size());
  out.write(reinterpret_cast<const char*>(v.data().data()),
            static_cast<std::streamsize>(v.size() * sizeof(float)));
  if (!out) throw std::runtime_error("nifti: write failed for " + path.string());
}

}  // namespace skullstrip
