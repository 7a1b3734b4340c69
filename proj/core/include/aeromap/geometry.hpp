#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace aeromap {

using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kHomographyEps = 1e-12;

/// 3x3 projective transform, kept normalized so that m(2,2) == 1 whenever
/// |m(2,2)| > 1e-12.
class Homography {
 public:
  Homography() : m_(Mat3::Identity()) {}
  explicit Homography(const Mat3& m);

  static Homography identity() { return Homography(); }
  static Homography translation(double tx, double ty);
  static Homography rotation(double radians);  // about the origin
  static Homography from_row_major(std::span<const double> values);

  const Mat3& matrix() const noexcept { return m_; }
  double operator()(int r, int c) const noexcept { return m_(r, c); }

  std::array<double, 9> row_major() const noexcept;

  /// Throws PointAtInfinity when |w| <= 1e-12.
  Vec2 project(const Vec2& p) const;

  /// Throws NonInvertibleResult when |det| <= 1e-12.
  Homography inverse() const;

  bool is_invertible() const noexcept;

 private:
  Mat3 m_;
};

inline Vec2 project(const Homography& h, const Vec2& p) { return h.project(p); }

/// A * B, renormalized. Throws NonInvertibleResult.
Homography compose(const Homography& a, const Homography& b);

struct Correspondence {
  Vec2 src;
  Vec2 dst;
};

struct NormalizedPoints {
  std::vector<Vec2> points;
  Mat3 transform;
};

/// Hartley conditioning: centroid to the origin, mean distance sqrt(2).
/// Throws DegenerateSet when all points coincide.
NormalizedPoints normalize_points(std::span<const Vec2> pts);

/// Normalized DLT on >= 4 correspondences; the homography is the right
/// singular vector of the smallest singular value. Throws NotEnoughPairs or
/// DegenerateConfiguration.
Homography dlt_homography(std::span<const Correspondence> pairs);

/// Forward transfer error ||H src - dst|| per pair; +inf for points at
/// infinity.
std::vector<double> reprojection_errors(const Homography& h,
                                        std::span<const Correspondence> pairs);

/// RMS over the four corners of a w x h frame of ||est(c) - ref(c)||.
double corner_transfer_rms(const Homography& est, const Homography& ref, int width,
                           int height);

/// Unsigned area of triangle (a, b, c).
double triangle_area(const Vec2& a, const Vec2& b, const Vec2& c) noexcept;

struct RansacConfig {
  double thresh = 3.0;
  double conf = 0.995;
  int max_iters = 2000;
  int min_inliers = 15;
  double max_rms = 3.0;  // acceptance gate, used by the pipeline
  std::uint64_t seed = 0;
};

struct RansacResult {
  Homography h;
  std::vector<std::uint8_t> inlier_mask;
  int inlier_count = 0;
  double rms_error = 0.0;
  int iterations_run = 0;

  bool operator==(const RansacResult& o) const {
    return h.matrix() == o.h.matrix() && inlier_mask == o.inlier_mask &&
           inlier_count == o.inlier_count && rms_error == o.rms_error &&
           iterations_run == o.iterations_run;
  }
};

/// Seeded RANSAC with adaptive iteration count and a final inlier refit.
/// Throws NotEnoughPairs (< 4 pairs) or NoConsensus.
RansacResult ransac_homography(std::span<const Correspondence> pairs, const RansacConfig& cfg,
                               std::mt19937_64& rng);

}  // namespace aeromap
