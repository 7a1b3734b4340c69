#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "aeromap/error.hpp"
#include "aeromap/features.hpp"
#include "aeromap/preprocess.hpp"

namespace aeromap {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kBriefSmoothingSigma = 2.0;

// Box-Muller over mt19937 so the pattern is identical on every standard
// library (std::normal_distribution is implementation-defined).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint32_t seed) : rng_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(rng_()) + 0.5) / 4294967296.0;
    const double u2 = (static_cast<double>(rng_()) + 0.5) / 4294967296.0;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    has_spare_ = true;
    return r * std::cos(kTwoPi * u2);
  }

 private:
  std::mt19937 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace

double orientation(const ImageGray& img, int x, int y, int radius) {
  if (x - radius < 0 || y - radius < 0 || x + radius >= img.width() ||
      y + radius >= img.height()) {
    throw Error(ErrorCode::PatchOutOfBounds, "orientation disc does not fit at (" +
                                                 std::to_string(x) + ", " + std::to_string(y) +
                                                 ")");
  }
  long long m10 = 0;
  long long m01 = 0;
  const int r2 = radius * radius;
  for (int v = -radius; v <= radius; ++v) {
    const std::uint8_t* row = img.row(y + v);
    for (int u = -radius; u <= radius; ++u) {
      if (u * u + v * v > r2) continue;
      const int I = row[x + u];
      m10 += static_cast<long long>(u) * I;
      m01 += static_cast<long long>(v) * I;
    }
  }
  if (m10 == 0 && m01 == 0) return 0.0;
  double a = std::atan2(static_cast<double>(m01), static_cast<double>(m10));
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

std::array<TestPair, 256> BriefPattern::generate(std::uint32_t seed) {
  GaussianStream g(seed);
  constexpr double sigma = 31.0 / 5.0;
  auto draw = [&] {
    return std::clamp(static_cast<int>(std::lround(sigma * g.next())), -kPatchHalf, kPatchHalf);
  };
  std::array<TestPair, 256> pairs{};
  for (auto& p : pairs) {
    p.ax = draw();
    p.ay = draw();
    do {
      p.bx = draw();
      p.by = draw();
    } while (p.bx == p.ax && p.by == p.ay);
  }
  return pairs;
}

BriefPattern::BriefPattern(std::uint32_t seed) { build_rotations(generate(seed)); }

BriefPattern BriefPattern::from_pairs(const std::array<TestPair, 256>& pairs) {
  BriefPattern p{Empty{}};
  p.build_rotations(pairs);
  return p;
}

void BriefPattern::build_rotations(const std::array<TestPair, 256>& base) {
  max_extent_ = 0;
  for (int bin = 0; bin < kAngleBins; ++bin) {
    const double theta = bin * kTwoPi / kAngleBins;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    auto rot = [&](int x, int y, int& ox, int& oy) {
      ox = static_cast<int>(std::lround(c * x - s * y));
      oy = static_cast<int>(std::lround(s * x + c * y));
      max_extent_ = std::max({max_extent_, std::abs(ox), std::abs(oy)});
    };
    for (std::size_t i = 0; i < base.size(); ++i) {
      TestPair& r = rotated_[bin][i];
      if (bin == 0) {
        r = base[i];
        max_extent_ = std::max({max_extent_, std::abs(r.ax), std::abs(r.ay), std::abs(r.bx),
                                std::abs(r.by)});
        continue;
      }
      rot(base[i].ax, base[i].ay, r.ax, r.ay);
      rot(base[i].bx, base[i].by, r.bx, r.by);
    }
  }
}

int BriefPattern::angle_bin(double angle) noexcept {
  const long bin = std::lround(angle / (kTwoPi / kAngleBins));
  return static_cast<int>(((bin % kAngleBins) + kAngleBins) % kAngleBins);
}

Descriptor256 brief_describe(const ImageGray& smoothed, int x, int y, double angle,
                             const BriefPattern& pattern) {
  const int ext = pattern.max_extent();
  if (x - ext < 0 || y - ext < 0 || x + ext >= smoothed.width() ||
      y + ext >= smoothed.height()) {
    throw Error(ErrorCode::PatchOutOfBounds, "descriptor patch does not fit at (" +
                                                 std::to_string(x) + ", " + std::to_string(y) +
                                                 ")");
  }
  const auto& pairs = pattern.rotated(BriefPattern::angle_bin(angle));
  Descriptor256 d;
  for (int i = 0; i < 256; ++i) {
    const TestPair& p = pairs[i];
    if (smoothed(x + p.ax, y + p.ay) < smoothed(x + p.bx, y + p.by)) d.set_bit(i);
  }
  return d;
}

OrbExtractor::OrbExtractor(FeatureConfig cfg)
    : cfg_(cfg), pattern_(cfg.seed), margin_(std::max(16, pattern_.max_extent())) {}

FeatureSet OrbExtractor::detect_and_describe(const ImageGray& img, std::int64_t frame_id) const {
  return detect_and_describe(build_pyramid(img, cfg_.scale_factor, cfg_.n_levels), frame_id);
}

FeatureSet OrbExtractor::detect_and_describe(const Pyramid& pyr, std::int64_t frame_id) const {
  FeatureSet out;
  out.frame_id = frame_id;
  if (pyr.levels.empty() || cfg_.n_features <= 0) return out;

  double total_area = 0.0;
  for (const auto& lv : pyr.levels) total_area += static_cast<double>(lv.width()) * lv.height();

  struct Candidate {
    Keypoint kp;
    Descriptor256 desc;
  };
  std::vector<Candidate> all;

  for (int level = 0; level < static_cast<int>(pyr.levels.size()); ++level) {
    const ImageGray& img = pyr.levels[level];
    const double area = static_cast<double>(img.width()) * img.height();
    const auto budget = static_cast<std::size_t>(std::lround(cfg_.n_features * area / total_area));
    if (budget == 0) continue;

    auto corners = fast_detect(img, cfg_.fast_threshold);
    std::erase_if(corners, [&](const FastCorner& c) {
      return c.x < margin_ || c.y < margin_ || c.x > img.width() - 1 - margin_ ||
             c.y > img.height() - 1 - margin_;
    });
    if (corners.empty()) continue;
    std::sort(corners.begin(), corners.end(), [](const FastCorner& a, const FastCorner& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.y != b.y) return a.y < b.y;
      return a.x < b.x;
    });
    if (corners.size() > budget) corners.resize(budget);

    const ImageGray smoothed = gaussian_blur(img, kBriefSmoothingSigma);
    for (const FastCorner& c : corners) {
      Candidate cand;
      cand.kp.level = level;
      cand.kp.level_x = c.x;
      cand.kp.level_y = c.y;
      cand.kp.score = static_cast<float>(c.score);
      cand.kp.angle = orientation(img, c.x, c.y);
      pyr.to_base(level, c.x, c.y, cand.kp.x, cand.kp.y);
      cand.desc = brief_describe(smoothed, c.x, c.y, cand.kp.angle, pattern_);
      all.push_back(cand);
    }
  }

  std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
    if (a.kp.score != b.kp.score) return a.kp.score > b.kp.score;
    if (a.kp.y != b.kp.y) return a.kp.y < b.kp.y;
    if (a.kp.x != b.kp.x) return a.kp.x < b.kp.x;
    return a.kp.level < b.kp.level;
  });
  if (all.size() > static_cast<std::size_t>(cfg_.n_features)) all.resize(cfg_.n_features);

  out.keypoints.reserve(all.size());
  out.descriptors.reserve(all.size());
  for (const auto& c : all) {
    out.keypoints.push_back(c.kp);
    out.descriptors.push_back(c.desc);
  }
  return out;
}

FeatureSet detect_and_describe(const Pyramid& pyr, const FeatureConfig& cfg,
                               std::int64_t frame_id) {
  return OrbExtractor(cfg).detect_and_describe(pyr, frame_id);
}

}  // namespace aeromap
