#include "aeromap/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "aeromap/error.hpp"

namespace aeromap {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

ImageGray gaussian_blur(const ImageGray& img, double sigma) {
  if (sigma <= 0.0 || img.empty()) return img;
  const auto kernel = gaussian_kernel(sigma);
  const int r = static_cast<int>(kernel.size() / 2);
  const int w = img.width();
  const int h = img.height();

  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* src = img.row(y);
    double* dst = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += kernel[i + r] * src[std::clamp(x + i, 0, w - 1)];
      dst[x] = acc;
    }
  }

  ImageGray out(w, h);
  std::vector<double> col(w);
  for (int y = 0; y < h; ++y) {
    std::fill(col.begin(), col.end(), 0.0);
    for (int i = -r; i <= r; ++i) {
      const double kw = kernel[i + r];
      const double* src = tmp.data() + static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w;
      for (int x = 0; x < w; ++x) col[x] += kw * src[x];
    }
    std::uint8_t* dst = out.row(y);
    for (int x = 0; x < w; ++x) dst[x] = saturate_u8(col[x]);
  }
  return out;
}

ImageGray hist_equalize(const ImageGray& img) {
  if (img.empty()) return img;
  std::array<std::size_t, 256> hist{};
  for (std::uint8_t v : img.pixels()) ++hist[v];

  std::array<std::size_t, 256> cdf{};
  std::size_t running = 0;
  std::size_t cdf_min = 0;
  for (int v = 0; v < 256; ++v) {
    running += hist[v];
    cdf[v] = running;
    if (cdf_min == 0 && running > 0) cdf_min = running;
  }
  const std::size_t n = img.size();
  if (cdf_min == n) return img;

  std::array<std::uint8_t, 256> lut{};
  const double denom = static_cast<double>(n - cdf_min);
  for (int v = 0; v < 256; ++v) {
    const double c = cdf[v] < cdf_min ? 0.0 : static_cast<double>(cdf[v] - cdf_min);
    lut[v] = saturate_u8(c / denom * 255.0);
  }
  ImageGray out = img;
  for (std::uint8_t& v : out.pixels()) v = lut[v];
  return out;
}

ImageGray resize_bilinear(const ImageGray& img, int out_width, int out_height) {
  if (out_width < 1 || out_height < 1) {
    throw Error(ErrorCode::InvalidDimensions, "resize target must be at least 1x1");
  }
  if (out_width == img.width() && out_height == img.height()) return img;

  const int w = img.width();
  const int h = img.height();
  const double sx_scale = static_cast<double>(w) / out_width;
  const double sy_scale = static_cast<double>(h) / out_height;

  struct Tap {
    int i0, i1;
    double f;
  };
  auto taps = [](int n_out, int n_in, double scale) {
    std::vector<Tap> t(n_out);
    for (int i = 0; i < n_out; ++i) {
      const double s = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(n_in - 1));
      const int i0 = static_cast<int>(s);
      t[i] = {i0, std::min(i0 + 1, n_in - 1), s - i0};
    }
    return t;
  };
  const auto xt = taps(out_width, w, sx_scale);
  const auto yt = taps(out_height, h, sy_scale);

  ImageGray out(out_width, out_height);
  for (int y = 0; y < out_height; ++y) {
    const std::uint8_t* r0 = img.row(yt[y].i0);
    const std::uint8_t* r1 = img.row(yt[y].i1);
    const double fy = yt[y].f;
    std::uint8_t* dst = out.row(y);
    for (int x = 0; x < out_width; ++x) {
      const Tap& t = xt[x];
      const double top = r0[t.i0] + t.f * (r0[t.i1] - r0[t.i0]);
      const double bottom = r1[t.i0] + t.f * (r1[t.i1] - r1[t.i0]);
      dst[x] = saturate_u8(top + fy * (bottom - top));
    }
  }
  return out;
}

PreparedImage preprocess(const ImageGray& raw, const PreprocessConfig& cfg) {
  PreparedImage out;
  const int tw = cfg.target_width > 0 ? cfg.target_width : raw.width();
  const int th = cfg.target_height > 0 ? cfg.target_height : raw.height();
  out.working = resize_bilinear(raw, tw, th);
  out.enhanced = gaussian_blur(out.working, cfg.blur_sigma);
  if (cfg.equalize) out.enhanced = hist_equalize(out.enhanced);
  return out;
}

}  // namespace aeromap
