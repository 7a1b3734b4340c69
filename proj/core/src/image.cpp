#include "aeromap/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aeromap/error.hpp"

namespace aeromap {

ImageGray::ImageGray(int width, int height, std::uint8_t fill) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidDimensions,
                "image must be at least 1x1, got " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
  width_ = width;
  height_ = height;
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

ImageGray::ImageGray(int width, int height, std::vector<std::uint8_t> data) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidDimensions, "image must be at least 1x1");
  }
  if (data.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::InvalidDimensions, "pixel buffer length does not match width*height");
  }
  width_ = width;
  height_ = height;
  data_ = std::move(data);
}

std::uint8_t ImageGray::at_clamped(int x, int y) const noexcept {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return (*this)(x, y);
}

double sample_bilinear(const ImageGray& img, double x, double y) noexcept {
  const double cx = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
  const double cy = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = static_cast<int>(cx);
  const int y0 = static_cast<int>(cy);
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = cx - x0;
  const double fy = cy - y0;
  const double top = img(x0, y0) + fx * (img(x1, y0) - img(x0, y0));
  const double bottom = img(x0, y1) + fx * (img(x1, y1) - img(x0, y1));
  return top + fy * (bottom - top);
}

std::uint8_t saturate_u8(double v) noexcept {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

}  // namespace aeromap
