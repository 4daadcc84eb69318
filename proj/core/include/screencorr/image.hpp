#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "screencorr/geometry.hpp"

namespace screencorr {

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  static Image filled(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b);

  bool empty() const { return width <= 0 || height <= 0; }
  const std::uint8_t* pixel(int x, int y) const { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
  std::uint8_t* pixel(int x, int y) { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }

  /// Pixel region covered by a normalized box; at least 1x1 when the image is non-empty.
  Image crop(const BoundingBox& box) const;
};

Image load_png(const std::filesystem::path& path);
void save_png(const Image& image, const std::filesystem::path& path);

}  // namespace screencorr
