#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>

#include "psg4d/error.hpp"
#include "psg4d/io.hpp"

namespace psg4d {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  if (mode[0] == 'w' && path.has_parent_path()) fs::create_directories(path.parent_path());
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) {
    throw Error(mode[0] == 'r' ? ErrorCode::MissingFile : ErrorCode::InvalidArgument,
                "cannot open " + path.string());
  }
  return f;
}

void png_warn(png_structp, png_const_charp) {}

[[noreturn]] void png_fail(png_structp png, png_const_charp) { png_longjmp(png, 1); }

// Rows are given as raw bytes already in PNG sample order.
void write_png(const fs::path& path, std::uint32_t height, std::uint32_t width, int bit_depth, int color_type,
               const std::vector<std::uint8_t>& bytes, std::size_t row_bytes) {
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  if (setjmp(png_jmpbuf(png))) throw Error(ErrorCode::InvalidArgument, "png write failed: " + path.string());
  png_init_io(png, file.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::uint32_t r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(bytes.data() + r * row_bytes));
  }
  png_write_end(png, nullptr);
}

struct PngData {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<std::uint8_t> bytes;
  std::size_t row_bytes = 0;
};

PngData read_png(const fs::path& path) {
  FilePtr file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};
  PngData d;
  if (setjmp(png_jmpbuf(png))) throw Error(ErrorCode::SchemaViolation, "corrupt png: " + path.string());
  png_init_io(png, file.get());
  png_read_info(png, info);
  d.width = png_get_image_width(png, info);
  d.height = png_get_image_height(png, info);
  d.bit_depth = png_get_bit_depth(png, info);
  d.color_type = png_get_color_type(png, info);
  d.row_bytes = png_get_rowbytes(png, info);
  d.bytes.resize(d.row_bytes * d.height);
  for (std::uint32_t r = 0; r < d.height; ++r) png_read_row(png, d.bytes.data() + r * d.row_bytes, nullptr);
  png_read_end(png, nullptr);
  return d;
}

}  // namespace

void write_depth_png(const fs::path& path, std::uint32_t height, std::uint32_t width,
                     const std::vector<std::uint16_t>& raw) {
  if (raw.size() != std::size_t{height} * width) {
    throw Error(ErrorCode::DimensionMismatch, "depth buffer size does not match image size");
  }
  // PNG stores 16-bit samples most significant byte first.
  std::vector<std::uint8_t> bytes(raw.size() * 2);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    bytes[2 * i] = static_cast<std::uint8_t>(raw[i] >> 8);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(raw[i] & 0xFF);
  }
  write_png(path, height, width, 16, PNG_COLOR_TYPE_GRAY, bytes, std::size_t{width} * 2);
}

std::vector<std::uint16_t> read_depth_png(const fs::path& path, std::uint32_t& height, std::uint32_t& width) {
  const PngData d = read_png(path);
  if (d.bit_depth != 16 || d.color_type != PNG_COLOR_TYPE_GRAY) {
    throw Error(ErrorCode::SchemaViolation, path.string() + ": depth frames must be 16-bit grayscale");
  }
  height = d.height;
  width = d.width;
  std::vector<std::uint16_t> raw(std::size_t{height} * width);
  for (std::uint32_t r = 0; r < height; ++r) {
    const std::uint8_t* row = d.bytes.data() + r * d.row_bytes;
    for (std::uint32_t c = 0; c < width; ++c) {
      raw[std::size_t{r} * width + c] = static_cast<std::uint16_t>((row[2 * c] << 8) | row[2 * c + 1]);
    }
  }
  return raw;
}

void write_rgb_png(const fs::path& path, const RgbImage& image) {
  if (image.data.size() != std::size_t{image.height} * image.width * 3) {
    throw Error(ErrorCode::DimensionMismatch, "rgb buffer size does not match image size");
  }
  write_png(path, image.height, image.width, 8, PNG_COLOR_TYPE_RGB, image.data, std::size_t{image.width} * 3);
}

RgbImage read_rgb_png(const fs::path& path) {
  const PngData d = read_png(path);
  if (d.bit_depth != 8 || d.color_type != PNG_COLOR_TYPE_RGB) {
    throw Error(ErrorCode::SchemaViolation, path.string() + ": rgb frames must be 8-bit RGB");
  }
  RgbImage img{d.height, d.width, {}};
  img.data.reserve(std::size_t{d.height} * d.width * 3);
  for (std::uint32_t r = 0; r < d.height; ++r) {
    const std::uint8_t* row = d.bytes.data() + r * d.row_bytes;
    img.data.insert(img.data.end(), row, row + std::size_t{d.width} * 3);
  }
  return img;
}

}  // namespace psg4d
