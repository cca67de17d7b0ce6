#pragma once

// Hand-rolled NIfTI-1 writer used as an independent oracle for the reader:
// every field is placed at its documented byte offset, in either byte order.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

namespace skullstrip::test {

class RawNifti {
 public:
  explicit RawNifti(bool big_endian) : big_endian_(big_endian) {
    put_i32(0, 348);
    std::memcpy(bytes_.data() + 344, "n+1\0", 4);
    put_f32(108, 352.0f);
  }

  void put_i16(std::size_t off, std::int16_t v) { put(off, v); }
  void put_i32(std::size_t off, std::int32_t v) { put(off, v); }
  void put_f32(std::size_t off, float v) { put(off, v); }

  void dims(std::int16_t nx, std::int16_t ny, std::int16_t nz, std::int16_t ndim = 3) {
    const std::int16_t d[8] = {ndim, nx, ny, nz, 1, 1, 1, 1};
    for (int n = 0; n < 8; ++n) put_i16(40 + 2 * n, d[n]);
  }
  void datatype(std::int16_t code, std::int16_t bitpix) {
    put_i16(70, code);
    put_i16(72, bitpix);
  }
  void pixdim(float qfac, float x, float y, float z) {
    const float p[4] = {qfac, x, y, z};
    for (int n = 0; n < 4; ++n) put_f32(76 + 4 * n, p[n]);
  }
  void scaling(float slope, float inter) {
    put_f32(112, slope);
    put_f32(116, inter);
  }
  void sform(const std::array<float, 12>& rows) {
    put_i16(254, 1);
    for (int n = 0; n < 12; ++n) put_f32(280 + 4 * n, rows[n]);
  }
  void qform(float b, float c, float d, float ox, float oy, float oz) {
    put_i16(252, 1);
    const float q[6] = {b, c, d, ox, oy, oz};
    for (int n = 0; n < 6; ++n) put_f32(256 + 4 * n, q[n]);
  }
  void magic(const char* m) { std::memcpy(bytes_.data() + 344, m, 4); }

  template <typename T>
  void body(const std::vector<T>& values) {
    body_.clear();
    for (T v : values) {
      std::array<char, sizeof(T)> raw;
      std::memcpy(raw.data(), &v, sizeof(T));
      if (big_endian_) std::reverse(raw.begin(), raw.end());
      body_.insert(body_.end(), raw.begin(), raw.end());
    }
  }

  void write(const std::filesystem::path& p) const {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes_.data(), bytes_.size());
    out.write(body_.data(), static_cast<std::streamsize>(body_.size()));
  }

 private:
  template <typename T>
  void put(std::size_t off, T v) {
    std::array<char, sizeof(T)> raw;
    std::memcpy(raw.data(), &v, sizeof(T));
    if (big_endian_) std::reverse(raw.begin(), raw.end());
    std::memcpy(bytes_.data() + off, raw.data(), sizeof(T));
  }

  bool big_endian_;
  std::array<char, 352> bytes_{};
  std::vector<char> body_;
};

}  // namespace skullstrip::test
