#pragma once

#include <vector>

#include "aeromap/image.hpp"

namespace aeromap {

inline constexpr int kMinPyramidDim = 16;

struct Pyramid {
  std::vector<ImageGray> levels;
  double scale_factor = 1.2;

  std::size_t size() const noexcept { return levels.size(); }

  /// Nominal scale of level k: scale_factor^k.
  double level_scale(int level) const;

  /// Maps pixel coordinates at `level` back to level-0 coordinates using the
  /// actual per-axis size ratio of that level (pixel-center aligned, the same
  /// convention resize_bilinear samples with).
  void to_base(int level, double x, double y, double& bx, double& by) const;
};

/// Level k is the source resized to floor(dim / scale_factor^k); the list is
/// truncated before any dimension would fall below 16. Throws ImageTooSmall
/// when the source itself is smaller than 16 in either dimension.
Pyramid build_pyramid(const ImageGray& img, double scale_factor, int max_levels);

}  // namespace aeromap
