#ifndef LISTEREO_IMAGE_IO_HPP_
#define LISTEREO_IMAGE_IO_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "listereo/geometry.hpp"

namespace listereo {

// Interleaved 8-bit image, row major.
struct ImageU8 {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  ImageU8() = default;
  ImageU8(int h, int w, int c)
      : height(h), width(w), channels(c),
        pixels(std::size_t(h) * w * c, 0) {}
  std::size_t idx(int y, int x, int c) const {
    return (std::size_t(y) * width + x) * channels + c;
  }
};

// KITTI-style 16-bit grayscale PNG depth maps: stored = round(depth_m*256),
// 0 encodes invalid. Lossless at 1/256 m for depths in (0, 256) m.
std::vector<std::uint8_t> encode_depth_png16(const DepthMap& map);
DepthMap decode_depth_png16(std::span<const std::uint8_t> bytes);
void write_depth_png16(const std::string& path, const DepthMap& map);
DepthMap read_depth_png16(const std::string& path);

// Binary PPM (P6) for color images, PGM (P5) for masks.
void write_ppm(const std::string& path, const ImageU8& img);
ImageU8 read_ppm(const std::string& path);
void write_pgm(const std::string& path, const ImageU8& img);
ImageU8 read_pgm(const std::string& path);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path,
                      std::span<const std::uint8_t> bytes);

}  // namespace listereo

#endif  // LISTEREO_IMAGE_IO_HPP_
