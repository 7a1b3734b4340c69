#include "aeromap/pyramid.hpp"

#include <cmath>
#include <string>

#include "aeromap/error.hpp"
#include "aeromap/preprocess.hpp"

namespace aeromap {

double Pyramid::level_scale(int level) const { return std::pow(scale_factor, level); }

void Pyramid::to_base(int level, double x, double y, double& bx, double& by) const {
  const ImageGray& base = levels.front();
  const ImageGray& lv = levels[level];
  const double rx = static_cast<double>(base.width()) / lv.width();
  const double ry = static_cast<double>(base.height()) / lv.height();
  bx = (x + 0.5) * rx - 0.5;
  by = (y + 0.5) * ry - 0.5;
}

Pyramid build_pyramid(const ImageGray& img, double scale_factor, int max_levels) {
  if (img.width() < kMinPyramidDim || img.height() < kMinPyramidDim) {
    throw Error(ErrorCode::ImageTooSmall, "pyramid source must be at least 16x16, got " +
                                              std::to_string(img.width()) + "x" +
                                              std::to_string(img.height()));
  }
  if (!(scale_factor > 1.0) || max_levels < 1) {
    throw Error(ErrorCode::InvalidConfig, "pyramid needs scaleFactor > 1 and maxLevels >= 1");
  }
  Pyramid pyr;
  pyr.scale_factor = scale_factor;
  pyr.levels.push_back(img);
  for (int k = 1; k < max_levels; ++k) {
    const double s = std::pow(scale_factor, k);
    const int w = static_cast<int>(std::floor(img.width() / s));
    const int h = static_cast<int>(std::floor(img.height() / s));
    if (w < kMinPyramidDim || h < kMinPyramidDim) break;
    // Each level is resampled from the previous one; the pixel-center
    // convention composes, so level k still covers the source exactly.
    pyr.levels.push_back(resize_bilinear(pyr.levels.back(), w, h));
  }
  return pyr;
}

}  // namespace aeromap
