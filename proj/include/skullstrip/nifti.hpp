#pragma once

#include <filesystem>

#include "skullstrip/image.hpp"

namespace skullstrip {

/// Reads an uncompressed single-file NIfTI-1 volume (magic "n+1").
///
/// Byte order is detected from sizeof_hdr. Voxels are converted to float
/// with scl_slope/scl_inter applied when scl_slope is nonzero. Geometry is
/// taken from the sform when sform_code > 0, otherwise from the qform when
/// qform_code > 0, otherwise axis-aligned from pixdim with zero origin.
/// Accepted datatypes: uint8 (2), int16 (4), float32 (16), float64 (64).
/// Throws std::runtime_error on any malformed or unsupported input.
Volume load_nifti(const std::filesystem::path& path);

/// Writes little-endian float32 NIfTI-1 with vox_offset 352 and sform_code 1.
void save_nifti(const Volume& v, const std::filesystem::path& path);

}  // namespace skullstrip
