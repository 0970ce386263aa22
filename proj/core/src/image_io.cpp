#include "egovos/image_io.hpp"

#include <algorithm>
#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <vector>

#include <png.h>

#include "egovos/errors.hpp"

namespace egovos {

namespace {

enum class ReadMode { kRgb8, kIndex8, kGray16 };

struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bytes_per_sample = 1;
  std::vector<unsigned char> pixels;
  const char* error = nullptr;
};

// All libpng work happens here; results only flow through `out`, so a
// longjmp back into this frame leaves no half-built C++ locals behind.
bool read_png_raw(const char* path, ReadMode mode, RawImage* out) {
  std::FILE* fp = std::fopen(path, "rb");
  if (!fp) {
    out->error = "cannot open file";
    return false;
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    out->error = "libpng initialization failed";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    if (!out->error) out->error = "corrupt or truncated PNG";
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (mode == ReadMode::kRgb8) {
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (depth < 8) png_set_packing(png);
    if (depth == 16) png_set_strip_16(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png), png_set_strip_alpha(png);
  } else if (mode == ReadMode::kIndex8) {
    if ((color != PNG_COLOR_TYPE_PALETTE && color != PNG_COLOR_TYPE_GRAY) || depth > 8) {
      out->error = "mask must be a palette-indexed or 8-bit grayscale PNG";
      png_longjmp(png, 1);
    }
    if (depth < 8) png_set_packing(png);
  } else {
    if (color != PNG_COLOR_TYPE_GRAY) {
      out->error = "depth must be a grayscale PNG";
      png_longjmp(png, 1);
    }
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  }
  png_read_update_info(png, info);
  out->width = static_cast<int>(png_get_image_width(png, info));
  out->height = static_cast<int>(png_get_image_height(png, info));
  out->channels = png_get_channels(png, info);
  out->bytes_per_sample = png_get_bit_depth(png, info) == 16 ? 2 : 1;
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  out->pixels.resize(rowbytes * out->height);
  std::vector<png_bytep> rows(out->height);
  for (int y = 0; y < out->height; ++y) rows[y] = out->pixels.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return true;
}

struct WriteRequest {
  int width = 0;
  int height = 0;
  int color_type = PNG_COLOR_TYPE_RGB;
  int bit_depth = 8;
  const unsigned char* pixels = nullptr;  // big-endian for 16-bit
  std::size_t rowbytes = 0;
  const png_color* palette = nullptr;
  int palette_size = 0;
};

bool write_png_raw(const char* path, const WriteRequest* req) {
  std::FILE* fp = std::fopen(path, "wb");
  if (!fp) return false;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, req->width, req->height, req->bit_depth, req->color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (req->palette) png_set_PLTE(png, info, req->palette, req->palette_size);
  png_write_info(png, info);
  for (int y = 0; y < req->height; ++y)
    png_write_row(png, const_cast<png_bytep>(req->pixels + req->rowbytes * y));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return std::fclose(fp) == 0;
}

RawImage read_or_throw(const std::filesystem::path& path, ReadMode mode) {
  RawImage raw;
  if (!read_png_raw(path.c_str(), mode, &raw)) {
    throw IoError("cannot read " + path.string() + ": " + (raw.error ? raw.error : "unknown error"));
  }
  return raw;
}

void write_or_throw(const std::filesystem::path& path, const WriteRequest& req) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!write_png_raw(path.c_str(), &req)) throw IoError("cannot write " + path.string());
}

unsigned char quantize(double v, double scale) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * scale));
}

}  // namespace

std::array<unsigned char, 3> palette_color(int index) {
  std::array<unsigned char, 3> c{0, 0, 0};
  int id = index;
  for (int shift = 7; shift >= 0; --shift) {
    c[0] |= ((id >> 0) & 1) << shift;
    c[1] |= ((id >> 1) & 1) << shift;
    c[2] |= ((id >> 2) & 1) << shift;
    id >>= 3;
  }
  return c;
}

Tensor read_rgb_png(const std::filesystem::path& path) {
  RawImage raw = read_or_throw(path, ReadMode::kRgb8);
  if (raw.channels != 3) throw IoError("unexpected channel count in " + path.string());
  Tensor out({3, raw.height, raw.width});
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(c, y, x) = raw.pixels[(static_cast<std::size_t>(y) * raw.width + x) * 3 + c] / 255.0;
  return out;
}

void write_rgb_png(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) throw ShapeError("RGB image must be [3,h,w]");
  const int h = image.dim(1), w = image.dim(2);
  std::vector<unsigned char> px(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        px[(static_cast<std::size_t>(y) * w + x) * 3 + c] = quantize(image.at(c, y, x), 255.0);
  WriteRequest req;
  req.width = w;
  req.height = h;
  req.color_type = PNG_COLOR_TYPE_RGB;
  req.pixels = px.data();
  req.rowbytes = static_cast<std::size_t>(w) * 3;
  write_or_throw(path, req);
}

MaskMap read_mask_png(const std::filesystem::path& path, int num_objects) {
  RawImage raw = read_or_throw(path, ReadMode::kIndex8);
  std::vector<int> labels(static_cast<std::size_t>(raw.width) * raw.height);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = raw.pixels[i];
    if (labels[i] > num_objects) {
      throw IoError("mask " + path.string() + " contains object id " + std::to_string(labels[i]) +
                    " but the sequence has " + std::to_string(num_objects) + " objects");
    }
  }
  return MaskMap(raw.height, raw.width, num_objects, std::move(labels));
}

void write_mask_png(const std::filesystem::path& path, const MaskMap& mask) {
  if (mask.num_objects() > 255) throw ShapeError("palette masks hold at most 255 objects");
  std::vector<unsigned char> px(mask.labels().begin(), mask.labels().end());
  std::vector<png_color> palette(256);
  for (int i = 0; i < 256; ++i) {
    const auto c = palette_color(i);
    palette[i] = {c[0], c[1], c[2]};
  }
  WriteRequest req;
  req.width = mask.width();
  req.height = mask.height();
  req.color_type = PNG_COLOR_TYPE_PALETTE;
  req.pixels = px.data();
  req.rowbytes = static_cast<std::size_t>(mask.width());
  req.palette = palette.data();
  req.palette_size = 256;
  write_or_throw(path, req);
}

Tensor read_depth_png(const std::filesystem::path& path) {
  RawImage raw = read_or_throw(path, ReadMode::kGray16);
  Tensor out({raw.height, raw.width});
  const double scale = raw.bytes_per_sample == 2 ? 65535.0 : 255.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const unsigned v = raw.bytes_per_sample == 2
                           ? (static_cast<unsigned>(raw.pixels[2 * i]) << 8) | raw.pixels[2 * i + 1]
                           : raw.pixels[i];
    out[i] = v / scale;
  }
  return out;
}

void write_depth_png(const std::filesystem::path& path, const Tensor& depth) {
  if (depth.rank() != 2) throw ShapeError("depth map must be [h,w]");
  const int h = depth.dim(0), w = depth.dim(1);
  std::vector<unsigned char> px(static_cast<std::size_t>(h) * w * 2);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const auto v = static_cast<unsigned>(std::lround(std::clamp(depth[i], 0.0, 1.0) * 65535.0));
    px[2 * i] = static_cast<unsigned char>(v >> 8);
    px[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
  }
  WriteRequest req;
  req.width = w;
  req.height = h;
  req.color_type = PNG_COLOR_TYPE_GRAY;
  req.bit_depth = 16;
  req.pixels = px.data();
  req.rowbytes = static_cast<std::size_t>(w) * 2;
  write_or_throw(path, req);
}

}  // namespace egovos
