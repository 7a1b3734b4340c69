#include <array>
#include <cstdlib>
#include <vector>

#include "aeromap/features.hpp"

namespace aeromap {
namespace {

// Bresenham circle of radius 3, clockwise from 12 o'clock.
constexpr std::array<std::array<int, 2>, 16> kCircle{{
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
    {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
}};

constexpr int kArc = 9;

}  // namespace

int fast_corner_score(const ImageGray& img, int x, int y, int threshold) {
  const int p = img(x, y);
  std::array<int, 16> diff{};
  std::array<int, 16> state{};  // +1 brighter, -1 darker, 0 similar
  for (int i = 0; i < 16; ++i) {
    diff[i] = img(x + kCircle[i][0], y + kCircle[i][1]) - p;
    state[i] = diff[i] > threshold ? 1 : (diff[i] < -threshold ? -1 : 0);
  }

  // Any 9-arc covers at least two of the compass points.
  int bright = 0;
  int dark = 0;
  for (int i = 0; i < 16; i += 4) {
    bright += state[i] > 0;
    dark += state[i] < 0;
  }
  if (bright < 2 && dark < 2) return -1;

  int start = -1;
  for (int i = 0; i < 16; ++i) {
    if (state[i] != state[(i + 15) % 16]) {
      start = i;
      break;
    }
  }
  if (start < 0) {
    if (state[0] == 0) return -1;
    int s = 0;
    for (int i = 0; i < 16; ++i) s += std::abs(diff[i]) - threshold;
    return s;
  }

  int best = -1;
  int run_len = 0;
  int run_sum = 0;
  int run_state = 0;
  for (int k = 0; k <= 16; ++k) {
    const int i = (start + k) % 16;
    const int s = k < 16 ? state[i] : 2;  // sentinel closes the last run
    if (s == run_state && s != 0) {
      ++run_len;
      run_sum += std::abs(diff[i]) - threshold;
      continue;
    }
    if (run_state != 0 && run_len >= kArc && run_sum > best) best = run_sum;
    run_state = s;
    run_len = (s == 1 || s == -1) ? 1 : 0;
    run_sum = run_len ? std::abs(diff[i]) - threshold : 0;
  }
  return best;
}

std::vector<FastCorner> fast_detect(const ImageGray& img, int threshold) {
  std::vector<FastCorner> out;
  const int w = img.width();
  const int h = img.height();
  if (w < 7 || h < 7) return out;

  std::vector<int> score(static_cast<std::size_t>(w) * h, -1);
  for (int y = 3; y < h - 3; ++y) {
    for (int x = 3; x < w - 3; ++x) {
      score[static_cast<std::size_t>(y) * w + x] = fast_corner_score(img, x, y, threshold);
    }
  }

  // 3x3 non-maximum suppression; equal scores resolve to the earlier pixel
  // in raster order.
  for (int y = 3; y < h - 3; ++y) {
    for (int x = 3; x < w - 3; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      const int s = score[idx];
      if (s < 0) continue;
      bool keep = true;
      for (int dy = -1; dy <= 1 && keep; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int q = score[idx + static_cast<std::ptrdiff_t>(dy) * w + dx];
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (q > s || (q == s && earlier)) {
            keep = false;
            break;
          }
        }
      }
      if (keep) out.push_back({x, y, s});
    }
  }
  return out;
}

}  // namespace aeromap
