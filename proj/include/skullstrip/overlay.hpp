#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skullstrip/image.hpp"

namespace skullstrip {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  std::array<std::uint8_t, 3> pixel(int x, int y) const {
    const std::size_t n = 3 * (static_cast<std::size_t>(y) * width + x);
    return {rgb[n], rgb[n + 1], rgb[n + 2]};
  }
};

struct OverlaySet {
  RgbImage axial;     // z fixed
  RgbImage coronal;   // y fixed
  RgbImage sagittal;  // x fixed
  Eigen::Vector3i slice;
};

/// Mid-slices through the mask centroid (grid centre for an empty mask).
/// Grayscale is windowed to the 2nd..98th intensity percentile; in-slice
/// mask boundary pixels are painted pure red. Row 0 is the highest index
/// of the vertical axis; pixels are not corrected for anisotropic spacing.
OverlaySet render_overlays(const Volume& v, const BinaryMask& mask);

/// Binary PPM (P6, maxval 255).
void write_ppm(const RgbImage& img, const std::filesystem::path& path);

/// Writes axial.ppm, coronal.ppm and sagittal.ppm into `dir` (created if needed).
void write_overlays(const OverlaySet& set, const std::filesystem::path& dir);

}  // namespace skullstrip
