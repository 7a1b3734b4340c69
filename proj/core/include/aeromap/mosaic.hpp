#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "aeromap/geometry.hpp"
#include "aeromap/image.hpp"

namespace aeromap {

/// Inclusive integer box in world (anchor-frame) pixel coordinates.
struct BBox {
  int min_x = 0;
  int min_y = 0;
  int max_x = -1;
  int max_y = -1;

  bool empty() const noexcept { return max_x < min_x || max_y < min_y; }
  int width() const noexcept { return empty() ? 0 : max_x - min_x + 1; }
  int height() const noexcept { return empty() ? 0 : max_y - min_y + 1; }
  bool contains(const BBox& o) const noexcept {
    return !empty() && o.min_x >= min_x && o.min_y >= min_y && o.max_x <= max_x &&
           o.max_y <= max_y;
  }
  BBox united(const BBox& o) const noexcept;

  bool operator==(const BBox&) const = default;
};

struct FramePose {
  std::int64_t frame_id = 0;
  Homography to_anchor;
  bool accepted = false;
};

/// toAnchor = prev.toAnchor * pairwise, where pairwise maps the current
/// frame into the previous one.
FramePose chain_pose(const FramePose& prev, const Homography& pairwise, std::int64_t frame_id);

/// floor/ceil box of the four projected frame corners. Throws
/// PointAtInfinity.
BBox projected_bounds(const Homography& h, int width, int height);

/// Linear border-distance feather weight, clamped to [0, 1].
double feather_weight(double sx, double sy, int width, int height) noexcept;

struct Snapshot {
  ImageGray image;
  ImageGray coverage;  // 255 where weight > 0.1
  int origin_x = 0;
  int origin_y = 0;
  std::int64_t frame_id = -1;
};

inline constexpr std::int64_t kDefaultCanvasCellCap = 16384LL * 16384LL;
inline constexpr double kCoverageWeight = 0.1;

/// Growable weighted compositing surface. Rendered pixel = round(accum /
/// weight) where weight > 0, else 0. Single writer.
class MosaicCanvas {
 public:
  explicit MosaicCanvas(std::int64_t max_cells = kDefaultCanvasCellCap);

  int origin_x() const noexcept { return origin_x_; }
  int origin_y() const noexcept { return origin_y_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  BBox extent() const noexcept;
  /// Union of everything composited so far; empty before the first frame.
  const BBox& used_bounds() const noexcept { return used_; }

  /// Grows (with >= 25 % slack per exceeded side) so that `bbox` fits,
  /// preserving content at its world coordinates. Throws CapacityExceeded.
  void ensure_capacity(const BBox& bbox);

  /// Inverse-warps `img` into the canvas with feather weights.
  void composite(const ImageGray& img, const Homography& to_anchor);

  /// Renders the used region. An empty canvas renders as a single
  /// background pixel at the origin.
  Snapshot render() const;

  float weight_at(int wx, int wy) const noexcept;
  float accum_at(int wx, int wy) const noexcept;

  /// Address of the accumulation buffer; changes only when the canvas grows.
  const float* storage_id() const noexcept { return accum_.data(); }

 private:
  std::int64_t max_cells_;
  int origin_x_ = 0;
  int origin_y_ = 0;
  int width_ = 0;
  int height_ = 0;
  BBox used_;
  std::vector<float> accum_;
  std::vector<float> weight_;
};

Snapshot render_snapshot(const MosaicCanvas& canvas);

/// Writes `<stem>.png` and the `<stem>.json` sidecar
/// {frameId, originX, originY, width, height}; optionally the coverage mask
/// as `<stem>_coverage.png`.
void write_snapshot(const std::filesystem::path& dir, const std::string& stem,
                    const Snapshot& snap, bool with_coverage = false);

/// `map_{frameId:06}`.
std::string snapshot_stem(std::int64_t frame_id);

}  // namespace aeromap
