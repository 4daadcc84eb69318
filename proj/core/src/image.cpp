#include "screencorr/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <png.h>

#include "screencorr/errors.hpp"

namespace screencorr {

Image Image::filled(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Image img;
  img.width = width;
  img.height = height;
  img.rgb.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
    img.rgb[i] = r;
    img.rgb[i + 1] = g;
    img.rgb[i + 2] = b;
  }
  return img;
}

Image Image::crop(const BoundingBox& box) const {
  if (empty()) return {};
  auto px = [](double v, int extent) { return std::clamp(static_cast<int>(std::floor(v * extent)), 0, extent - 1); };
  const int x0 = px(box.x1, width);
  const int y0 = px(box.y1, height);
  const int x1 = std::max(x0 + 1, std::min(width, static_cast<int>(std::ceil(box.x2 * width))));
  const int y1 = std::max(y0 + 1, std::min(height, static_cast<int>(std::ceil(box.y2 * height))));
  Image out;
  out.width = x1 - x0;
  out.height = y1 - y0;
  out.rgb.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  for (int y = 0; y < out.height; ++y) {
    std::memcpy(out.pixel(0, y), pixel(x0, y0 + y), static_cast<std::size_t>(out.width) * 3);
  }
  return out;
}

Image load_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw Error(ErrorCode::kIo, "cannot read PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  Image img;
  img.width = static_cast<int>(png.width);
  img.height = static_cast<int>(png.height);
  img.rgb.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.rgb.data(), 0, nullptr)) {
    png_image_free(&png);
    throw Error(ErrorCode::kIo, "cannot decode PNG " + path.string() + ": " + png.message);
  }
  return img;
}

void save_png(const Image& image, const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.rgb.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, "cannot write PNG " + path.string() + ": " + png.message);
  }
}

}  // namespace screencorr
