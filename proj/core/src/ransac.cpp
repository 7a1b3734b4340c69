#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "aeromap/error.hpp"
#include "aeromap/geometry.hpp"

namespace aeromap {
namespace {

constexpr double kMinSampleArea = 1.0;  // px^2

struct Score {
  int count = 0;
  double rms = std::numeric_limits<double>::infinity();
};

// Inlier count and inlier RMS of `h`, optionally filling `mask`.
Score score_model(const Homography& h, std::span<const Correspondence> pairs, double thresh,
                  std::vector<std::uint8_t>* mask) {
  const Mat3& m = h.matrix();
  const double t2 = thresh * thresh;
  Score s;
  double sq_sum = 0.0;
  if (mask) mask->assign(pairs.size(), 0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Vec2& p = pairs[i].src;
    const double w = m(2, 0) * p.x() + m(2, 1) * p.y() + m(2, 2);
    if (std::abs(w) <= kHomographyEps) continue;
    const double u = (m(0, 0) * p.x() + m(0, 1) * p.y() + m(0, 2)) / w;
    const double v = (m(1, 0) * p.x() + m(1, 1) * p.y() + m(1, 2)) / w;
    const double du = u - pairs[i].dst.x();
    const double dv = v - pairs[i].dst.y();
    const double e2 = du * du + dv * dv;
    if (e2 <= t2) {
      ++s.count;
      sq_sum += e2;
      if (mask) (*mask)[i] = 1;
    }
  }
  if (s.count > 0) s.rms = std::sqrt(sq_sum / s.count);
  return s;
}

bool sample_is_degenerate(const std::array<Vec2, 4>& p) {
  static constexpr std::array<std::array<int, 3>, 4> kTriples{{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}};
  for (const auto& t : kTriples) {
    if (triangle_area(p[t[0]], p[t[1]], p[t[2]]) < kMinSampleArea) return true;
  }
  return false;
}

int adaptive_iterations(double inlier_ratio, double conf, int max_iters) {
  const double w4 = std::pow(inlier_ratio, 4);
  if (w4 >= 1.0 - 1e-15) return 1;
  if (w4 <= 0.0) return max_iters;
  const double n = std::ceil(std::log(1.0 - conf) / std::log(1.0 - w4));
  if (!std::isfinite(n) || n > max_iters) return max_iters;
  return std::max(1, static_cast<int>(n));
}

}  // namespace

RansacResult ransac_homography(std::span<const Correspondence> pairs, const RansacConfig& cfg,
                               std::mt19937_64& rng) {
  const std::size_t n = pairs.size();
  if (n < 4) throw Error(ErrorCode::NotEnoughPairs, "RANSAC needs at least 4 pairs");

  Score best;
  Homography best_h;
  bool have_model = false;
  int needed = cfg.max_iters;
  int iterations = 0;
  // Degenerate samples do not count as iterations; bound the attempts so an
  // all-collinear input terminates.
  const long max_attempts = std::max<long>(1000, 100L * cfg.max_iters);
  long attempts = 0;

  std::array<std::size_t, 4> idx{};
  std::array<Vec2, 4> sample_src;
  std::array<Vec2, 4> sample_dst;
  std::array<Correspondence, 4> sample;

  while (iterations < needed && attempts < max_attempts) {
    ++attempts;
    for (int k = 0; k < 4; ++k) {
      bool fresh = false;
      while (!fresh) {
        idx[k] = static_cast<std::size_t>(rng() % n);
        fresh = std::find(idx.begin(), idx.begin() + k, idx[k]) == idx.begin() + k;
      }
      sample[k] = pairs[idx[k]];
      sample_src[k] = sample[k].src;
      sample_dst[k] = sample[k].dst;
    }
    if (sample_is_degenerate(sample_src) || sample_is_degenerate(sample_dst)) continue;
    ++iterations;

    Homography h;
    try {
      h = dlt_homography(sample);
    } catch (const Error&) {
      continue;
    }
    const Score s = score_model(h, pairs, cfg.thresh, nullptr);
    if (s.count > best.count || (s.count == best.count && s.count > 0 && s.rms < best.rms)) {
      best = s;
      best_h = h;
      have_model = true;
      needed = std::min(cfg.max_iters,
                        adaptive_iterations(static_cast<double>(s.count) / n, cfg.conf,
                                            cfg.max_iters));
    }
  }

  if (!have_model || best.count < 4) {
    throw Error(ErrorCode::NoConsensus, "no model reached 4 inliers");
  }

  RansacResult result;
  result.iterations_run = iterations;
  std::vector<std::uint8_t> mask;
  score_model(best_h, pairs, cfg.thresh, &mask);
  std::vector<Correspondence> inliers;
  inliers.reserve(best.count);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) inliers.push_back(pairs[i]);
  }
  Homography refit = best_h;
  try {
    refit = dlt_homography(inliers);
  } catch (const Error&) {
    refit = best_h;
  }
  const Score final_score = score_model(refit, pairs, cfg.thresh, &result.inlier_mask);
  result.h = refit;
  result.inlier_count = final_score.count;
  result.rms_error = final_score.count > 0 ? final_score.rms : 0.0;

  if (result.inlier_count < std::max(4, cfg.min_inliers)) {
    throw Error(ErrorCode::NoConsensus, "best model has " + std::to_string(result.inlier_count) +
                                            " inliers, need " + std::to_string(cfg.min_inliers));
  }
  return result;
}

}  // namespace aeromap
