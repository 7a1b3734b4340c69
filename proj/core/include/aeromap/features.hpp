#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "aeromap/image.hpp"
#include "aeromap/pyramid.hpp"

namespace aeromap {

/// Oriented, scale-tagged corner. (x, y) are level-0 coordinates; (level_x,
/// level_y) is the integer detection position inside `level`.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  int level = 0;
  float score = 0.0f;
  double angle = 0.0;  // radians in [0, 2pi)
  int level_x = 0;
  int level_y = 0;

  bool operator==(const Keypoint&) const = default;
};

/// 256-bit binary descriptor; bit i is the outcome of test pair i.
struct Descriptor256 {
  std::array<std::uint64_t, 4> words{};

  bool bit(int i) const noexcept { return (words[i >> 6] >> (i & 63)) & 1u; }
  void set_bit(int i, bool value = true) noexcept {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (value) {
      words[i >> 6] |= mask;
    } else {
      words[i >> 6] &= ~mask;
    }
  }

  bool operator==(const Descriptor256&) const = default;
};

struct FeatureSet {
  std::int64_t frame_id = 0;
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor256> descriptors;

  std::size_t size() const noexcept { return keypoints.size(); }
  bool empty() const noexcept { return keypoints.empty(); }
  bool operator==(const FeatureSet&) const = default;
};

struct FeatureConfig {
  int n_features = 500;
  int fast_threshold = 20;
  double scale_factor = 1.2;
  int n_levels = 8;
  std::uint32_t seed = 42;
};

struct FastCorner {
  int x = 0;
  int y = 0;
  int score = 0;
};

/// FAST-9/16 segment test with 3x3 non-maximum suppression. Pixels closer
/// than 3 px to the border are never tested.
std::vector<FastCorner> fast_detect(const ImageGray& img, int threshold);

/// Segment test on a single pixel; returns the arc score or -1 when the
/// pixel is not a corner. Exposed for oracles and benchmarks.
int fast_corner_score(const ImageGray& img, int x, int y, int threshold);

inline constexpr int kOrientationRadius = 15;
inline constexpr int kPatchHalf = 15;  // 31x31 descriptor patch
inline constexpr int kAngleBins = 30;

/// Intensity-centroid orientation over the disc u^2 + v^2 <= radius^2.
/// Throws PatchOutOfBounds if the disc does not fit.
double orientation(const ImageGray& img, int x, int y, int radius = kOrientationRadius);

struct TestPair {
  int ax, ay, bx, by;
};

/// Fixed 256-pair sampling pattern plus its 30 pre-rotated copies.
class BriefPattern {
 public:
  explicit BriefPattern(std::uint32_t seed = 42);

  /// Pairs drawn from an isotropic Gaussian (sigma 31/5), rounded and
  /// clamped to the 31x31 patch.
  static std::array<TestPair, 256> generate(std::uint32_t seed);

  /// Builds a pattern from explicit pairs (used by tests).
  static BriefPattern from_pairs(const std::array<TestPair, 256>& pairs);

  const std::array<TestPair, 256>& base() const noexcept { return rotated_[0]; }
  const std::array<TestPair, 256>& rotated(int bin) const noexcept { return rotated_[bin]; }

  /// Largest |offset| component over all rotated pairs; a keypoint needs
  /// this many pixels of margin for its descriptor to fit.
  int max_extent() const noexcept { return max_extent_; }

  static int angle_bin(double angle) noexcept;

 private:
  struct Empty {};
  explicit BriefPattern(Empty) {}
  void build_rotations(const std::array<TestPair, 256>& base);

  std::array<std::array<TestPair, 256>, kAngleBins> rotated_{};
  int max_extent_ = 0;
};

/// Steered BRIEF on a pre-smoothed image. Throws PatchOutOfBounds when a
/// rotated sample falls outside the image.
Descriptor256 brief_describe(const ImageGray& smoothed, int x, int y, double angle,
                             const BriefPattern& pattern);

/// ORB extractor: FAST per pyramid level, area-proportional budgets,
/// intensity-centroid orientation and steered BRIEF. Stateless apart from
/// the immutable pattern table, so one instance may be shared by threads.
class OrbExtractor {
 public:
  explicit OrbExtractor(FeatureConfig cfg = {});

  const FeatureConfig& config() const noexcept { return cfg_; }
  const BriefPattern& pattern() const noexcept { return pattern_; }

  /// Border margin (at each level) inside which keypoints are kept.
  int margin() const noexcept { return margin_; }

  FeatureSet detect_and_describe(const Pyramid& pyr, std::int64_t frame_id = 0) const;

  /// Convenience: builds the pyramid with the configured scale and levels.
  FeatureSet detect_and_describe(const ImageGray& img, std::int64_t frame_id = 0) const;

 private:
  FeatureConfig cfg_;
  BriefPattern pattern_;
  int margin_;
};

FeatureSet detect_and_describe(const Pyramid& pyr, const FeatureConfig& cfg,
                               std::int64_t frame_id = 0);

}  // namespace aeromap
