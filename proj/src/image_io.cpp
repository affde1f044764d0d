#include "listereo/image_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace listereo {

namespace {

struct PngWriteSink {
  std::vector<std::uint8_t>* out;
};

void png_sink_write(png_structp png, png_bytep data, png_size_t len) {
  auto* sink = static_cast<PngWriteSink*>(png_get_io_ptr(png));
  sink->out->insert(sink->out->end(), data, data + len);
}

void png_sink_flush(png_structp) {}

struct PngReadSource {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void png_source_read(png_structp png, png_bytep out, png_size_t len) {
  auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
  if (src->pos + len > src->size)
    png_error(png, "truncated PNG stream");
  std::memcpy(out, src->data + src->pos, len);
  src->pos += len;
}

[[noreturn]] void png_throw(png_structp, png_const_charp msg) {
  throw IoError(std::string("png: ") + msg);
}

void png_warn_ignore(png_structp, png_const_charp) {}

}  // namespace

std::vector<std::uint8_t> encode_depth_png16(const DepthMap& map) {
  std::vector<std::uint16_t> stored(map.depth.size(), 0);
  for (std::size_t i = 0; i < map.depth.size(); ++i) {
    if (!map.valid[i]) continue;
    const double d = map.depth[i];
    check_shape(d > 0.0 && d < 256.0,
                "encode_depth_png16: depth must be in (0, 256) m");
    stored[i] = std::uint16_t(std::lround(d * 256.0));
  }

  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_throw, png_warn_ignore);
  if (!png) throw IoError("png: failed to create write struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: failed to create info struct");
  }
  try {
    PngWriteSink sink{&out};
    png_set_write_fn(png, &sink, png_sink_write, png_sink_flush);
    png_set_IHDR(png, info, png_uint_32(map.width), png_uint_32(map.height),
                 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<std::uint8_t> row(std::size_t(map.width) * 2);
    for (int y = 0; y < map.height; ++y) {
      for (int x = 0; x < map.width; ++x) {
        const std::uint16_t v = stored[std::size_t(y) * map.width + x];
        row[std::size_t(x) * 2] = std::uint8_t(v >> 8);  // big endian
        row[std::size_t(x) * 2 + 1] = std::uint8_t(v & 0xff);
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, info);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

DepthMap decode_depth_png16(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw IoError("decode_depth_png16: not a PNG stream");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_throw, png_warn_ignore);
  if (!png) throw IoError("png: failed to create read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png: failed to create info struct");
  }
  DepthMap map;
  try {
    PngReadSource src{bytes.data(), bytes.size(), 0};
    png_set_read_fn(png, &src, png_source_read);
    png_read_info(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    if (bit_depth != 16 || color_type != PNG_COLOR_TYPE_GRAY)
      throw IoError("decode_depth_png16: expected 16-bit grayscale, got " +
                    std::to_string(bit_depth) + "-bit color type " +
                    std::to_string(color_type));
    const int w = int(png_get_image_width(png, info));
    const int h = int(png_get_image_height(png, info));
    map = DepthMap(h, w);
    std::vector<std::uint8_t> row(std::size_t(w) * 2);
    for (int y = 0; y < h; ++y) {
      png_read_row(png, row.data(), nullptr);
      for (int x = 0; x < w; ++x) {
        const std::uint16_t v =
            std::uint16_t((row[std::size_t(x) * 2] << 8) |
                          row[std::size_t(x) * 2 + 1]);
        if (v != 0) {
          map.depth[map.idx(y, x)] = double(v) / 256.0;
          map.valid[map.idx(y, x)] = 1;
        }
      }
    }
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return map;
}

void write_depth_png16(const std::string& path, const DepthMap& map) {
  write_file_bytes(path, encode_depth_png16(map));
}

DepthMap read_depth_png16(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return decode_depth_png16(bytes);
}

namespace {

void write_pnm(const std::string& path, const ImageU8& img, bool color) {
  check_shape(img.channels == (color ? 3 : 1), "pnm: wrong channel count");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << (color ? "P6" : "P5") << "\n"
    << img.width << " " << img.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.pixels.data()),
          std::streamsize(img.pixels.size()));
  if (!f) throw IoError("write failed: " + path);
}

int pnm_token(std::istream& in, const std::string& path) {
  // Skips whitespace and '#' comments.
  int c = in.get();
  while (c == '#' || std::isspace(c)) {
    if (c == '#')
      while (c != '\n' && c != EOF) c = in.get();
    c = in.get();
  }
  int value = 0;
  bool any = false;
  while (std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw IoError("malformed PNM header: " + path);
  return value;
}

ImageU8 read_pnm(const std::string& path, bool color) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  char m0 = 0, m1 = 0;
  f.get(m0);
  f.get(m1);
  const char expect = color ? '6' : '5';
  if (m0 != 'P' || m1 != expect)
    throw IoError("unexpected PNM magic in " + path);
  const int w = pnm_token(f, path);
  const int h = pnm_token(f, path);
  const int maxval = pnm_token(f, path);
  if (maxval != 255) throw IoError("unsupported PNM maxval in " + path);
  ImageU8 img(h, w, color ? 3 : 1);
  f.read(reinterpret_cast<char*>(img.pixels.data()),
         std::streamsize(img.pixels.size()));
  if (f.gcount() != std::streamsize(img.pixels.size()))
    throw IoError("truncated PNM payload in " + path);
  return img;
}

}  // namespace

void write_ppm(const std::string& path, const ImageU8& img) {
  write_pnm(path, img, true);
}

ImageU8 read_ppm(const std::string& path) { return read_pnm(path, true); }

void write_pgm(const std::string& path, const ImageU8& img) {
  write_pnm(path, img, false);
}

ImageU8 read_pgm(const std::string& path) { return read_pnm(path, false); }

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError("cannot open: " + path);
  const auto size = f.tellg();
  f.seekg(0);
  std::vector<std::uint8_t> bytes(std::size_t(size));
  f.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!f) throw IoError("read failed: " + path);
  return bytes;
}

void write_file_bytes(const std::string& path,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          std::streamsize(bytes.size()));
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace listereo
