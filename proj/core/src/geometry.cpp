#include "aeromap/geometry.hpp"

#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "aeromap/error.hpp"

namespace aeromap {
namespace {

constexpr double kRankTolerance = 1e-10;

Mat3 normalized(const Mat3& m) {
  if (std::abs(m(2, 2)) > kHomographyEps) return m / m(2, 2);
  return m;
}

}  // namespace

Homography::Homography(const Mat3& m) : m_(normalized(m)) {}

Homography Homography::translation(double tx, double ty) {
  Mat3 m = Mat3::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return Homography(m);
}

Homography Homography::rotation(double radians) {
  Mat3 m = Mat3::Identity();
  m(0, 0) = std::cos(radians);
  m(0, 1) = -std::sin(radians);
  m(1, 0) = std::sin(radians);
  m(1, 1) = std::cos(radians);
  return Homography(m);
}

Homography Homography::from_row_major(std::span<const double> values) {
  if (values.size() != 9) {
    throw Error(ErrorCode::InvalidConfig, "homography needs 9 row-major values");
  }
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = values[3 * r + c];
  }
  return Homography(m);
}

std::array<double, 9> Homography::row_major() const noexcept {
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out[3 * r + c] = m_(r, c);
  }
  return out;
}

Vec2 Homography::project(const Vec2& p) const {
  const double w = m_(2, 0) * p.x() + m_(2, 1) * p.y() + m_(2, 2);
  if (std::abs(w) <= kHomographyEps) {
    throw Error(ErrorCode::PointAtInfinity, "point maps to infinity");
  }
  return {(m_(0, 0) * p.x() + m_(0, 1) * p.y() + m_(0, 2)) / w,
          (m_(1, 0) * p.x() + m_(1, 1) * p.y() + m_(1, 2)) / w};
}

bool Homography::is_invertible() const noexcept {
  const double d = m_.determinant();
  return std::isfinite(d) && std::abs(d) > kHomographyEps;
}

Homography Homography::inverse() const {
  if (!is_invertible()) throw Error(ErrorCode::NonInvertibleResult, "homography is singular");
  return Homography(m_.inverse());
}

Homography compose(const Homography& a, const Homography& b) {
  Homography r(a.matrix() * b.matrix());
  if (!r.is_invertible()) {
    throw Error(ErrorCode::NonInvertibleResult, "composed homography is singular");
  }
  return r;
}

NormalizedPoints normalize_points(std::span<const Vec2> pts) {
  if (pts.size() < 2) throw Error(ErrorCode::DegenerateSet, "need at least two points");
  Vec2 centroid = Vec2::Zero();
  for (const Vec2& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());

  double mean_dist = 0.0;
  for (const Vec2& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 1e-12)) throw Error(ErrorCode::DegenerateSet, "all points coincide");

  const double s = std::sqrt(2.0) / mean_dist;
  NormalizedPoints out;
  out.transform << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  out.points.reserve(pts.size());
  for (const Vec2& p : pts) out.points.emplace_back(s * (p - centroid));
  return out;
}

Homography dlt_homography(std::span<const Correspondence> pairs) {
  if (pairs.size() < 4) throw Error(ErrorCode::NotEnoughPairs, "DLT needs at least 4 pairs");
  std::vector<Vec2> src;
  std::vector<Vec2> dst;
  src.reserve(pairs.size());
  dst.reserve(pairs.size());
  for (const auto& c : pairs) {
    src.push_back(c.src);
    dst.push_back(c.dst);
  }
  NormalizedPoints ns;
  NormalizedPoints nd;
  try {
    ns = normalize_points(src);
    nd = normalize_points(dst);
  } catch (const Error&) {
    throw Error(ErrorCode::DegenerateConfiguration, "coincident points in DLT input");
  }

  const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = ns.points[i].x();
    const double y = ns.points[i].y();
    const double u = nd.points[i].x();
    const double v = nd.points[i].y();
    a.row(2 * i) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    a.row(2 * i + 1) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // A one-dimensional null space needs the eighth singular value to stay
  // clear of zero.
  if (sv.size() < 8 || !(sv(7) > kRankTolerance * sv(0))) {
    throw Error(ErrorCode::DegenerateConfiguration, "DLT system is rank deficient");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  const Mat3 h_full = nd.transform.inverse() * hn * ns.transform;
  if (!h_full.allFinite()) throw Error(ErrorCode::DegenerateConfiguration, "non-finite DLT result");
  return Homography(h_full);
}

std::vector<double> reprojection_errors(const Homography& h,
                                        std::span<const Correspondence> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& c : pairs) {
    try {
      out.push_back((h.project(c.src) - c.dst).norm());
    } catch (const Error&) {
      out.push_back(std::numeric_limits<double>::infinity());
    }
  }
  return out;
}

double corner_transfer_rms(const Homography& est, const Homography& ref, int width, int height) {
  const std::array<Vec2, 4> corners{Vec2(0, 0), Vec2(width - 1, 0), Vec2(0, height - 1),
                                    Vec2(width - 1, height - 1)};
  double sum = 0.0;
  for (const Vec2& c : corners) sum += (est.project(c) - ref.project(c)).squaredNorm();
  return std::sqrt(sum / 4.0);
}

double triangle_area(const Vec2& a, const Vec2& b, const Vec2& c) noexcept {
  const Vec2 ab = b - a;
  const Vec2 ac = c - a;
  return 0.5 * std::abs(ab.x() * ac.y() - ab.y() * ac.x());
}

}  // namespace aeromap
