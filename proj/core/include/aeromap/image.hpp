#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace aeromap {

/// Owned 8-bit grayscale raster, row-major. A default-constructed image is
/// empty (0x0); every other image has width >= 1 and height >= 1.
class ImageGray {
 public:
  ImageGray() = default;
  ImageGray(int width, int height, std::uint8_t fill = 0);
  ImageGray(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::uint8_t operator()(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint8_t& operator()(int x, int y) noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  /// Edge-replicating access: coordinates outside the raster are clamped.
  std::uint8_t at_clamped(int x, int y) const noexcept;

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  const std::uint8_t* row(int y) const noexcept {
    return data_.data() + static_cast<std::size_t>(y) * width_;
  }
  std::uint8_t* row(int y) noexcept {
    return data_.data() + static_cast<std::size_t>(y) * width_;
  }

  std::span<const std::uint8_t> pixels() const noexcept { return data_; }
  std::span<std::uint8_t> pixels() noexcept { return data_; }

  bool operator==(const ImageGray&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Bilinear sample at real coordinates, clamped to the valid pixel range.
double sample_bilinear(const ImageGray& img, double x, double y) noexcept;

/// Round-half-up and saturate to [0, 255].
std::uint8_t saturate_u8(double v) noexcept;

}  // namespace aeromap
