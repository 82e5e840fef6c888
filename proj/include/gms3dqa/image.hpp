#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace gms {

using Rgb = std::array<std::uint8_t, 3>;

/// Interleaved 8-bit RGB raster, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill = {0, 0, 0});

  std::uint8_t* pixel(int row, int col) { return data.data() + (static_cast<std::size_t>(row) * width + col) * 3; }
  const std::uint8_t* pixel(int row, int col) const {
    return data.data() + (static_cast<std::size_t>(row) * width + col) * 3;
  }
  std::size_t stride() const { return static_cast<std::size_t>(width) * 3; }

  bool operator==(const RgbImage&) const = default;
};

/// One byte per pixel, 0 or 1.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
  std::uint8_t at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }

  bool operator==(const Mask&) const = default;
};

/// Copies a w x h block starting at (row, col) of src into dst at (dst_row, dst_col).
void copy_block(const RgbImage& src, int row, int col, int w, int h, RgbImage& dst, int dst_row, int dst_col);

/// Bilinear resize (pixel-center aligned), rounding to nearest.
RgbImage resize_bilinear(const RgbImage& src, int width, int height);

/// Resize so the short side equals `side`, then center-crop to side x side.
RgbImage resize_center_crop(const RgbImage& src, int side);

void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_png(const std::filesystem::path& path, const Mask& mask);

/// Encodes to an in-memory PNG byte string (deterministic for equal input).
std::vector<std::uint8_t> encode_png(const RgbImage& image);

/// Reads 8-bit gray, RGB or RGBA PNGs; alpha is dropped, gray is expanded.
RgbImage read_png(const std::filesystem::path& path);

}  // namespace gms
