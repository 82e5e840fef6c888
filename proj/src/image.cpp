#include "gms3dqa/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "gms3dqa/error.hpp"

namespace gms {

RgbImage::RgbImage(int w, int h, Rgb fill) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < data.size(); i += 3) {
    data[i] = fill[0];
    data[i + 1] = fill[1];
    data[i + 2] = fill[2];
  }
}

void copy_block(const RgbImage& src, int row, int col, int w, int h, RgbImage& dst, int dst_row, int dst_col) {
  for (int r = 0; r < h; ++r) {
    std::memcpy(dst.pixel(dst_row + r, dst_col), src.pixel(row + r, col), static_cast<std::size_t>(w) * 3);
  }
}

RgbImage resize_bilinear(const RgbImage& src, int width, int height) {
  RgbImage out(width, height);
  const double sx = static_cast<double>(src.width) / width;
  const double sy = static_cast<double>(src.height) / height;
  for (int r = 0; r < height; ++r) {
    double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
    int y0 = static_cast<int>(fy);
    int y1 = std::min(y0 + 1, src.height - 1);
    double wy = fy - y0;
    for (int c = 0; c < width; ++c) {
      double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
      int x0 = static_cast<int>(fx);
      int x1 = std::min(x0 + 1, src.width - 1);
      double wx = fx - x0;
      for (int ch = 0; ch < 3; ++ch) {
        double top = src.pixel(y0, x0)[ch] * (1 - wx) + src.pixel(y0, x1)[ch] * wx;
        double bot = src.pixel(y1, x0)[ch] * (1 - wx) + src.pixel(y1, x1)[ch] * wx;
        out.pixel(r, c)[ch] = static_cast<std::uint8_t>(std::lround(top * (1 - wy) + bot * wy));
      }
    }
  }
  return out;
}

RgbImage resize_center_crop(const RgbImage& src, int side) {
  int w, h;
  if (src.width <= src.height) {
    w = side;
    h = static_cast<int>(std::lround(static_cast<double>(src.height) * side / src.width));
  } else {
    h = side;
    w = static_cast<int>(std::lround(static_cast<double>(src.width) * side / src.height));
  }
  RgbImage resized = resize_bilinear(src, w, h);
  if (w == side && h == side) return resized;
  RgbImage out(side, side);
  copy_block(resized, (h - side) / 2, (w - side) / 2, side, side, out, 0, 0);
  return out;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void png_write_rows(png_structp png, png_infop info, int width, int height, int color_type,
                    const std::uint8_t* rows, std::size_t stride) {
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (int r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(rows + static_cast<std::size_t>(r) * stride));
  }
  png_write_end(png, nullptr);
}

void write_png_impl(const std::filesystem::path& path, int width, int height, int color_type,
                    const std::uint8_t* rows, std::size_t stride) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::Io, "PNG encode failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_write_rows(png, info, width, height, color_type, rows, stride);
  png_destroy_write_struct(&png, &info);
}

void append_bytes(png_structp png, png_bytep bytes, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), bytes, bytes + len);
}

}  // namespace

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  write_png_impl(path, image.width, image.height, PNG_COLOR_TYPE_RGB, image.data.data(), image.stride());
}

void write_png(const std::filesystem::path& path, const Mask& mask) {
  std::vector<std::uint8_t> gray(mask.data.size());
  std::transform(mask.data.begin(), mask.data.end(), gray.begin(), [](std::uint8_t v) { return v ? 255 : 0; });
  write_png_impl(path, mask.width, mask.height, PNG_COLOR_TYPE_GRAY, gray.data(),
                 static_cast<std::size_t>(mask.width));
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::Io, "PNG encode failed");
  }
  png_set_write_fn(png, &out, append_bytes, nullptr);
  png_write_rows(png, info, image.width, image.height, PNG_COLOR_TYPE_RGB, image.data.data(), image.stride());
  png_destroy_write_struct(&png, &info);
  return out;
}

RgbImage read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(Errc::Io, "cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  RgbImage image;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::ParseError, "invalid PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  image = RgbImage(static_cast<int>(png_get_image_width(png, info)), static_cast<int>(png_get_image_height(png, info)));
  if (png_get_rowbytes(png, info) != image.stride()) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::ParseError, "unexpected PNG layout in " + path.string());
  }
  for (int r = 0; r < image.height; ++r) png_read_row(png, image.pixel(r, 0), nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

}  // namespace gms
