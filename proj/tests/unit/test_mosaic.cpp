#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "aeromap/error.hpp"
#include "aeromap/image_io.hpp"
#include "aeromap/mosaic.hpp"
#include "oracles.hpp"

using namespace aeromap;

namespace {

double max_abs_diff(const Mat3& a, const Mat3& b) { return (a - b).cwiseAbs().maxCoeff(); }

ImageGray crop(const ImageGray& src, int x0, int y0, int w, int h) {
  ImageGray out(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(x, y) = src(x0 + x, y0 + y);
  return out;
}

double oracle_feather(double sx, double sy, int w, int h) {
  const double d = std::min(std::min(sx, sy), std::min(w - 1 - sx, h - 1 - sy));
  return std::max(0.0, std::min(1.0, 2.0 * d / std::min(w, h)));
}

}  // namespace

TEST(ChainPose, Examples) {
  const FramePose anchor{0, Homography::identity(), true};
  EXPECT_LE(max_abs_diff(chain_pose(anchor, Homography::translation(10, 0), 1).to_anchor.matrix(),
                         Homography::translation(10, 0).matrix()),
            1e-12);
  FramePose p = anchor;
  for (int k = 1; k <= 7; ++k) p = chain_pose(p, Homography::translation(5, 0), k);
  EXPECT_EQ(p.frame_id, 7);
  EXPECT_TRUE(p.accepted);
  EXPECT_LE(max_abs_diff(p.to_anchor.matrix(), Homography::translation(35, 0).matrix()), 1e-12);
  const FramePose r{0, Homography::rotation(std::numbers::pi / 2), true};
  EXPECT_LE(max_abs_diff(chain_pose(r, Homography::rotation(-std::numbers::pi / 2), 1).to_anchor.matrix(),
                         Mat3::Identity()),
            1e-9);
}

TEST(ProjectedBounds, Examples) {
  EXPECT_EQ(projected_bounds(Homography::identity(), 640, 480), (BBox{0, 0, 639, 479}));
  EXPECT_EQ(projected_bounds(Homography::translation(-10, 5), 100, 100), (BBox{-10, 5, 89, 104}));
  EXPECT_EQ(projected_bounds(Homography::rotation(std::numbers::pi / 2), 100, 50), (BBox{-49, 0, 0, 99}));
  EXPECT_EQ(projected_bounds(Homography::translation(0.5, -0.5), 10, 10), (BBox{0, -1, 10, 9}));
}

TEST(ProjectedBounds, CornerAtInfinityThrows) {
  Mat3 m = Mat3::Identity();
  m(2, 0) = -1.0 / 99.0;
  try {
    projected_bounds(Homography(m), 100, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PointAtInfinity);
  }
}

TEST(Feather, MatchesFormula) {
  for (double sx : {0.0, 0.5, 10.0, 100.0, 319.5, 639.0})
    for (double sy : {0.0, 3.0, 120.0, 240.0, 479.0})
      EXPECT_DOUBLE_EQ(feather_weight(sx, sy, 640, 480), oracle_feather(sx, sy, 640, 480));
}

TEST(Canvas, EnsureCapacity) {
  MosaicCanvas c;
  EXPECT_TRUE(c.extent().empty());
  c.ensure_capacity({0, 0, 99, 99});
  EXPECT_TRUE(c.extent().contains({0, 0, 99, 99}));
  const float* id = c.storage_id();
  const BBox before = c.extent();
  c.ensure_capacity({10, 10, 50, 50});
  EXPECT_EQ(c.storage_id(), id);
  EXPECT_EQ(c.extent(), before);
}

TEST(Canvas, GrowthSlack) {
  MosaicCanvas c;
  c.ensure_capacity({0, 0, 99, 99});
  const BBox a = c.extent();
  c.ensure_capacity({a.min_x - 10, a.min_y, a.max_x, a.max_y + 1});
  const BBox b = c.extent();
  EXPECT_LE(b.min_x, a.min_x - 10 - a.width() / 4);
  EXPECT_GE(b.max_y, a.max_y + 1 + a.height() / 4);
  EXPECT_EQ(b.max_x, a.max_x);
}

TEST(Canvas, GrowthPreservesContent) {
  const ImageGray img = oracle::blob_texture(80, 60, 4);
  MosaicCanvas c;
  c.composite(img, Homography::translation(5, 7));
  const Snapshot before = c.render();
  std::vector<float> acc, wt;
  for (int y = 7; y < 67; ++y)
    for (int x = 5; x < 85; ++x) {
      acc.push_back(c.accum_at(x, y));
      wt.push_back(c.weight_at(x, y));
    }
  c.ensure_capacity({-500, -400, 900, 700});
  EXPECT_LE(c.extent().min_x, -500);
  std::size_t i = 0;
  for (int y = 7; y < 67; ++y)
    for (int x = 5; x < 85; ++x, ++i) {
      ASSERT_EQ(c.accum_at(x, y), acc[i]);
      ASSERT_EQ(c.weight_at(x, y), wt[i]);
    }
  const Snapshot after = c.render();
  EXPECT_EQ(after.image, before.image);
  EXPECT_EQ(after.origin_x, before.origin_x);
  EXPECT_EQ(after.origin_y, before.origin_y);
}

TEST(Canvas, CapacityExceeded) {
  MosaicCanvas c(200 * 200);
  c.ensure_capacity({0, 0, 99, 99});
  try {
    c.ensure_capacity({0, 0, 999, 999});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CapacityExceeded);
  }
}

TEST(Composite, ConstantImage) {
  MosaicCanvas c;
  c.composite(ImageGray(64, 48, 100), Homography::identity());
  const Snapshot s = c.render();
  EXPECT_EQ(s.origin_x, 0);
  EXPECT_EQ(s.origin_y, 0);
  int covered = 0;
  for (int y = 0; y < s.image.height(); ++y)
    for (int x = 0; x < s.image.width(); ++x)
      if (c.weight_at(x, y) > 0) {
        EXPECT_EQ(s.image(x, y), 100);
        ++covered;
      } else {
        EXPECT_EQ(s.image(x, y), 0);
      }
  EXPECT_GT(covered, 62 * 46 - 1);
}

TEST(Composite, EqualWeightsAverage) {
  MosaicCanvas c;
  c.composite(ImageGray(64, 48, 100), Homography::identity());
  c.composite(ImageGray(64, 48, 200), Homography::identity());
  const Snapshot s = c.render();
  for (int y = 1; y < 47; ++y)
    for (int x = 1; x < 63; ++x) ASSERT_EQ(s.image(x, y), 150);
}

TEST(Composite, WeightsFollowFeather) {
  MosaicCanvas c;
  c.composite(ImageGray(40, 30, 9), Homography::identity());
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x)
      EXPECT_NEAR(c.weight_at(x, y), oracle_feather(x, y, 40, 30), 1e-6);
}

TEST(Composite, WeightMonotone) {
  const ImageGray img = oracle::blob_texture(60, 50, 8);
  MosaicCanvas c;
  c.composite(img, Homography::identity());
  c.ensure_capacity({-40, -40, 120, 120});
  std::vector<float> prev;
  for (int y = -40; y <= 120; ++y)
    for (int x = -40; x <= 120; ++x) prev.push_back(c.weight_at(x, y));
  Mat3 m = Homography::rotation(0.2).matrix();
  m(0, 2) = 20;
  m(1, 2) = -10;
  c.composite(img, Homography(m));
  std::size_t i = 0;
  for (int y = -40; y <= 120; ++y)
    for (int x = -40; x <= 120; ++x, ++i) ASSERT_GE(c.weight_at(x, y), prev[i]);
}

TEST(Composite, SingleFrameMatchesSource) {
  const ImageGray img = oracle::blob_texture(120, 90, 9);
  MosaicCanvas c;
  c.composite(img, Homography::identity());
  const Snapshot s = c.render();
  ASSERT_EQ(s.image.width(), 120);
  ASSERT_EQ(s.image.height(), 90);
  for (int y = 0; y < 90; ++y)
    for (int x = 0; x < 120; ++x) {
      if (oracle_feather(x, y, 120, 90) < kCoverageWeight) continue;
      ASSERT_LE(std::abs(s.image(x, y) - img(x, y)), 1);
      EXPECT_EQ(s.coverage(x, y), 255);
    }
}

TEST(Composite, TranslationSequenceReproducesSource) {
  const ImageGray src = oracle::blob_texture(400, 300, 12, 5);
  MosaicCanvas c;
  const int w = 160, h = 120;
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 4; ++col) {
      const int x0 = 20 + 64 * col, y0 = 15 + 48 * row;
      c.composite(crop(src, x0, y0, w, h), Homography::translation(x0 - 20, y0 - 15));
    }
  const Snapshot s = c.render();
  double sum = 0.0;
  long n = 0;
  for (int y = 0; y < s.image.height(); ++y)
    for (int x = 0; x < s.image.width(); ++x) {
      if (c.weight_at(x + s.origin_x, y + s.origin_y) <= 0) continue;
      sum += std::abs(s.image(x, y) - src(x + s.origin_x + 20, y + s.origin_y + 15));
      ++n;
    }
  ASSERT_GT(n, 0);
  EXPECT_LE(sum / n, 2.0);
}

TEST(Composite, DisjointOrderIndependent) {
  const ImageGray a = oracle::blob_texture(50, 40, 1);
  const ImageGray b = oracle::blob_texture(50, 40, 2);
  const Homography ha = Homography::translation(-300, 20);
  Mat3 mb = Homography::rotation(0.3).matrix();
  mb(0, 2) = 200;
  mb(1, 2) = 150;
  const Homography hb(mb);
  MosaicCanvas c1, c2;
  c1.composite(a, ha);
  c1.composite(b, hb);
  c2.composite(b, hb);
  c2.composite(a, ha);
  const Snapshot s1 = c1.render(), s2 = c2.render();
  EXPECT_EQ(s1.image, s2.image);
  EXPECT_EQ(s1.coverage, s2.coverage);
  EXPECT_EQ(s1.origin_x, s2.origin_x);
  EXPECT_EQ(s1.origin_y, s2.origin_y);
}

TEST(Render, EmptyAndIdempotent) {
  MosaicCanvas c;
  const Snapshot e = render_snapshot(c);
  for (auto v : e.image.pixels()) EXPECT_EQ(v, 0);
  c.composite(oracle::blob_texture(30, 30, 3), Homography::translation(-7, 4));
  const Snapshot a = render_snapshot(c), b = render_snapshot(c);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.origin_x, -7);
  EXPECT_EQ(a.origin_y, 4);
}

TEST(Snapshot, FilesAndSidecar) {
  oracle::TempDir dir("mosaic");
  MosaicCanvas c;
  c.composite(oracle::blob_texture(30, 20, 3), Homography::translation(-3, 2));
  Snapshot s = c.render();
  s.frame_id = 12;
  EXPECT_EQ(snapshot_stem(12), "map_000012");
  write_snapshot(dir.path(), snapshot_stem(12), s, true);
  const ImageGray back = load_image(dir.path() / "map_000012.png");
  EXPECT_EQ(back, s.image);
  EXPECT_EQ(load_image(dir.path() / "map_000012_coverage.png"), s.coverage);
  std::ifstream in(dir.path() / "map_000012.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("frameId"), 12);
  EXPECT_EQ(j.at("originX"), -3);
  EXPECT_EQ(j.at("originY"), 2);
  EXPECT_EQ(j.at("width"), s.image.width());
  EXPECT_EQ(j.at("height"), s.image.height());
}
