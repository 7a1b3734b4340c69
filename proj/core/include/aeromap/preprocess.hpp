#pragma once

#include "aeromap/image.hpp"

namespace aeromap {

/// Separable Gaussian blur with radius ceil(3 sigma) and edge replication.
/// sigma == 0 returns a copy. The intermediate pass is kept in floating
/// point; rounding happens once at the end.
ImageGray gaussian_blur(const ImageGray& img, double sigma);

/// Normalized 1-D Gaussian kernel of radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Global histogram equalization. Constant images are returned unchanged.
ImageGray hist_equalize(const ImageGray& img);

/// Pixel-center aligned bilinear resize; throws InvalidDimensions on a zero
/// output size.
ImageGray resize_bilinear(const ImageGray& img, int out_width, int out_height);

struct PreprocessConfig {
  int target_width = 640;
  int target_height = 480;
  double blur_sigma = 1.0;
  bool equalize = true;
};

/// Result of ingest preprocessing. `working` is the frame at the uniform
/// working resolution (used for compositing); `enhanced` is the denoised and
/// contrast-enhanced version used for feature extraction.
struct PreparedImage {
  ImageGray working;
  ImageGray enhanced;
};

PreparedImage preprocess(const ImageGray& raw, const PreprocessConfig& cfg);

}  // namespace aeromap
