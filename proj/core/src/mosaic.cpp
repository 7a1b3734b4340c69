#include "aeromap/mosaic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "aeromap/error.hpp"
#include "aeromap/image_io.hpp"

namespace aeromap {
namespace {

// Snap tolerance so that corners landing on integers up to rounding noise
// (e.g. cos(pi/2) != 0) do not widen the box by a pixel.
constexpr double kSnap = 1e-9;

}  // namespace

BBox BBox::united(const BBox& o) const noexcept {
  if (empty()) return o;
  if (o.empty()) return *this;
  return {std::min(min_x, o.min_x), std::min(min_y, o.min_y), std::max(max_x, o.max_x),
          std::max(max_y, o.max_y)};
}

FramePose chain_pose(const FramePose& prev, const Homography& pairwise, std::int64_t frame_id) {
  return FramePose{frame_id, compose(prev.to_anchor, pairwise), true};
}

BBox projected_bounds(const Homography& h, int width, int height) {
  const std::array<Vec2, 4> corners{Vec2(0, 0), Vec2(width - 1, 0), Vec2(0, height - 1),
                                    Vec2(width - 1, height - 1)};
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const Vec2& c : corners) {
    const Vec2 p = h.project(c);
    min_x = std::min(min_x, p.x());
    min_y = std::min(min_y, p.y());
    max_x = std::max(max_x, p.x());
    max_y = std::max(max_y, p.y());
  }
  auto fl = [](double v) { return static_cast<int>(std::floor(v + kSnap)); };
  auto ce = [](double v) { return static_cast<int>(std::ceil(v - kSnap)); };
  return {fl(min_x), fl(min_y), ce(max_x), ce(max_y)};
}

double feather_weight(double sx, double sy, int width, int height) noexcept {
  const double edge = std::min({sx, sy, width - 1 - sx, height - 1 - sy});
  const double half = std::min(width, height) / 2.0;
  return std::clamp(edge / half, 0.0, 1.0);
}

MosaicCanvas::MosaicCanvas(std::int64_t max_cells) : max_cells_(max_cells) {}

BBox MosaicCanvas::extent() const noexcept {
  if (width_ == 0 || height_ == 0) return {};
  return {origin_x_, origin_y_, origin_x_ + width_ - 1, origin_y_ + height_ - 1};
}

void MosaicCanvas::ensure_capacity(const BBox& bbox) {
  if (bbox.empty()) return;
  const BBox current = extent();
  if (current.contains(bbox)) return;

  const BBox need = current.united(bbox);
  auto cells = [](const BBox& b) {
    return static_cast<std::int64_t>(b.width()) * static_cast<std::int64_t>(b.height());
  };
  if (cells(need) > max_cells_) {
    throw Error(ErrorCode::CapacityExceeded,
                "mosaic would need " + std::to_string(need.width()) + "x" +
                    std::to_string(need.height()) + " cells");
  }

  const int slack_x = std::max(16, (need.width() + 3) / 4);
  const int slack_y = std::max(16, (need.height() + 3) / 4);
  BBox grown = need;
  const bool was_empty = current.empty();
  if (was_empty || bbox.min_x < current.min_x) grown.min_x -= slack_x;
  if (was_empty || bbox.max_x > current.max_x) grown.max_x += slack_x;
  if (was_empty || bbox.min_y < current.min_y) grown.min_y -= slack_y;
  if (was_empty || bbox.max_y > current.max_y) grown.max_y += slack_y;
  if (cells(grown) > max_cells_) grown = need;

  std::vector<float> accum(static_cast<std::size_t>(cells(grown)), 0.0f);
  std::vector<float> weight(accum.size(), 0.0f);
  const int gw = grown.width();
  for (int y = 0; y < height_; ++y) {
    const std::size_t src = static_cast<std::size_t>(y) * width_;
    const std::size_t dst = static_cast<std::size_t>(y + origin_y_ - grown.min_y) * gw +
                            (origin_x_ - grown.min_x);
    std::copy_n(accum_.begin() + src, width_, accum.begin() + dst);
    std::copy_n(weight_.begin() + src, width_, weight.begin() + dst);
  }
  accum_ = std::move(accum);
  weight_ = std::move(weight);
  origin_x_ = grown.min_x;
  origin_y_ = grown.min_y;
  width_ = grown.width();
  height_ = grown.height();
}

void MosaicCanvas::composite(const ImageGray& img, const Homography& to_anchor) {
  const Homography inv = to_anchor.inverse();
  const BBox box = projected_bounds(to_anchor, img.width(), img.height());
  ensure_capacity(box);
  used_ = used_.united(box);

  const Mat3& m = inv.matrix();
  const double max_sx = img.width() - 1;
  const double max_sy = img.height() - 1;
  for (int wy = box.min_y; wy <= box.max_y; ++wy) {
    const std::size_t row = static_cast<std::size_t>(wy - origin_y_) * width_;
    for (int wx = box.min_x; wx <= box.max_x; ++wx) {
      const double w = m(2, 0) * wx + m(2, 1) * wy + m(2, 2);
      if (std::abs(w) <= kHomographyEps) continue;
      const double sx = (m(0, 0) * wx + m(0, 1) * wy + m(0, 2)) / w;
      const double sy = (m(1, 0) * wx + m(1, 1) * wy + m(1, 2)) / w;
      if (!(sx >= 0.0 && sy >= 0.0 && sx <= max_sx && sy <= max_sy)) continue;
      const double wf = feather_weight(sx, sy, img.width(), img.height());
      if (wf <= 0.0) continue;
      const std::size_t idx = row + static_cast<std::size_t>(wx - origin_x_);
      accum_[idx] += static_cast<float>(wf * sample_bilinear(img, sx, sy));
      weight_[idx] += static_cast<float>(wf);
    }
  }
}

float MosaicCanvas::weight_at(int wx, int wy) const noexcept {
  const int x = wx - origin_x_;
  const int y = wy - origin_y_;
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return 0.0f;
  return weight_[static_cast<std::size_t>(y) * width_ + x];
}

float MosaicCanvas::accum_at(int wx, int wy) const noexcept {
  const int x = wx - origin_x_;
  const int y = wy - origin_y_;
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return 0.0f;
  return accum_[static_cast<std::size_t>(y) * width_ + x];
}

Snapshot MosaicCanvas::render() const {
  Snapshot s;
  if (used_.empty()) {
    s.image = ImageGray(1, 1, 0);
    s.coverage = ImageGray(1, 1, 0);
    return s;
  }
  s.origin_x = used_.min_x;
  s.origin_y = used_.min_y;
  s.image = ImageGray(used_.width(), used_.height(), 0);
  s.coverage = ImageGray(used_.width(), used_.height(), 0);
  for (int y = 0; y < used_.height(); ++y) {
    const std::size_t row =
        static_cast<std::size_t>(y + used_.min_y - origin_y_) * width_ + (used_.min_x - origin_x_);
    for (int x = 0; x < used_.width(); ++x) {
      const float w = weight_[row + x];
      if (w > 0.0f) s.image(x, y) = saturate_u8(accum_[row + x] / w);
      if (w > kCoverageWeight) s.coverage(x, y) = 255;
    }
  }
  return s;
}

Snapshot render_snapshot(const MosaicCanvas& canvas) { return canvas.render(); }

std::string snapshot_stem(std::int64_t frame_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "map_%06lld", static_cast<long long>(frame_id));
  return buf;
}

void write_snapshot(const std::filesystem::path& dir, const std::string& stem,
                    const Snapshot& snap, bool with_coverage) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  save_image(dir / (stem + ".png"), snap.image);
  if (with_coverage) save_image(dir / (stem + "_coverage.png"), snap.coverage);
  std::ofstream js(dir / (stem + ".json"));
  if (!js) throw Error(ErrorCode::IoError, "cannot write sidecar for " + stem);
  js << "{\"frameId\": " << snap.frame_id << ", \"originX\": " << snap.origin_x
     << ", \"originY\": " << snap.origin_y << ", \"width\": " << snap.image.width()
     << ", \"height\": " << snap.image.height() << "}\n";
}

}  // namespace aeromap
