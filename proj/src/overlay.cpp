#include "skullstrip/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace skullstrip {
namespace {

struct Window {
  float low;
  float high;
};

Window percentile_window(const Volume& v) {
  std::vector<float> sorted(v.data().begin(), v.data().end());
  std::sort(sorted.begin(), sorted.end());
  const auto at = [&](double q) {
    return sorted[static_cast<std::size_t>(std::floor(q * (sorted.size() - 1)))];
  };
  return {at(0.02), at(0.98)};
}

/// A 2-D view into the volume: pixel (x, y) -> voxel index.
template <typename Index>
RgbImage render_slice(const Volume& v, const BinaryMask& mask, int width, int height, Window w,
                      Index voxel_of) {
  RgbImage img{width, height, std::vector<std::uint8_t>(3 * static_cast<std::size_t>(width) * height)};
  const auto in_mask = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= width || y >= height) return false;
    const auto p = voxel_of(x, y);
    return mask(p[0], p[1], p[2]) != 0;
  };
  const float range = w.high - w.low;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const auto p = voxel_of(x, y);
      std::uint8_t* px = &img.rgb[3 * (static_cast<std::size_t>(y) * width + x)];
      if (in_mask(x, y) && (!in_mask(x - 1, y) || !in_mask(x + 1, y) || !in_mask(x, y - 1) ||
                            !in_mask(x, y + 1))) {
        px[0] = 255;
        px[1] = 0;
        px[2] = 0;
        continue;
      }
      double t = range > 0 ? (v(p[0], p[1], p[2]) - w.low) / range : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const auto gray = static_cast<std::uint8_t>(std::lround(t * 255.0));
      px[0] = px[1] = px[2] = gray;
    }
  return img;
}

}  // namespace

OverlaySet render_overlays(const Volume& v, const BinaryMask& mask) {
  require_same_geometry(v.geometry(), mask.geometry(), "overlay");
  const auto& d = v.dims();

  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  std::size_t count = 0;
  for (std::size_t n = 0; n < mask.size(); ++n)
    if (mask[n]) {
      sum += v.geometry().grid_index(n).cast<double>();
      ++count;
    }
  Eigen::Vector3i c;
  for (int a = 0; a < 3; ++a) {
    const double centre = count ? sum[a] / count : (d[a] - 1) / 2.0;
    c[a] = std::clamp(static_cast<int>(std::lround(centre)), 0, d[a] - 1);
  }

  const Window w = percentile_window(v);
  OverlaySet set;
  set.slice = c;
  set.axial = render_slice(v, mask, d.x(), d.y(), w, [&](int x, int y) {
    return std::array<int, 3>{x, d.y() - 1 - y, c.z()};
  });
  set.coronal = render_slice(v, mask, d.x(), d.z(), w, [&](int x, int y) {
    return std::array<int, 3>{x, c.y(), d.z() - 1 - y};
  });
  set.sagittal = render_slice(v, mask, d.y(), d.z(), w, [&](int x, int y) {
    return std::array<int, 3>{c.x(), x, d.z() - 1 - y};
  });
  return set;
}

void write_ppm(const RgbImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("overlay: cannot write " + path.string());
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (!out) throw std::runtime_error("overlay: write failed for " + path.string());
}

void write_overlays(const OverlaySet& set, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw std::runtime_error("overlay: cannot create directory " + dir.string());
  write_ppm(set.axial, dir / "axial.ppm");
  write_ppm(set.coronal, dir / "coronal.ppm");
  write_ppm(set.sagittal, dir / "sagittal.ppm");
}

}  // namespace skullstrip
