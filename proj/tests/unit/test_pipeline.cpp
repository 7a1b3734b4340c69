#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "aeromap/concurrency.hpp"
#include "aeromap/error.hpp"
#include "aeromap/image_io.hpp"
#include "aeromap/pipeline.hpp"
#include "aeromap/synthbench.hpp"
#include "oracles.hpp"

using namespace aeromap;
using namespace std::chrono_literals;

namespace {

// Small, fast flight: 320x240 frames at a 320x240 working resolution.
RunConfig small_config() {
  RunConfig cfg;
  cfg.imaging.target_width = 320;
  cfg.imaging.target_height = 240;
  cfg.features.n_levels = 4;
  cfg.pipeline.workers = 3;
  return cfg;
}

std::vector<ImageGray> small_flight(int frames, std::uint64_t seed = 7) {
  const ImageGray src = make_reference_texture(1400, 900, seed);
  FlightConfig f;
  f.frames = frames;
  f.width = 320;
  f.height = 240;
  f.max_rot_deg = 3.0;
  f.seed = seed;
  return generate_sequence(src, f).images();
}

RansacResult result(int inliers, double rms) {
  RansacResult r;
  r.inlier_count = inliers;
  r.rms_error = rms;
  return r;
}

int count_reason(const Telemetry& t, const std::string& reason) {
  return static_cast<int>(std::count_if(t.per_frame.begin(), t.per_frame.end(),
                                        [&](const FrameTicket& f) { return f.reason == reason; }));
}

std::vector<std::string> files_in(const std::filesystem::path& dir, const std::string& prefix) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind(prefix, 0) == 0) out.push_back(name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(BoundedQueue, FifoCapacityAndClose) {
  BoundedQueue<int> q(2);
  EXPECT_TRUE(q.try_push(1));
  EXPECT_TRUE(q.try_push(2));
  EXPECT_FALSE(q.try_push(3));
  EXPECT_EQ(q.high_water(), 2u);
  EXPECT_EQ(q.pop(), 1);
  q.close();
  EXPECT_FALSE(q.push(4));
  EXPECT_EQ(q.pop(), 2);
  EXPECT_FALSE(q.pop().has_value());
}

TEST(BoundedQueue, PushBlocksWhileFull) {
  BoundedQueue<int> q(1);
  q.push(1);
  std::atomic<bool> pushed{false};
  std::thread producer([&] {
    q.push(2);
    pushed = true;
  });
  std::this_thread::sleep_for(50ms);
  EXPECT_FALSE(pushed.load());
  EXPECT_EQ(q.pop(), 1);
  producer.join();
  EXPECT_TRUE(pushed.load());
  EXPECT_EQ(q.pop(), 2);
}

TEST(BoundedQueue, OccupancyNeverExceedsCapacity) {
  BoundedQueue<int> q(3);
  std::thread producer([&] {
    for (int i = 0; i < 2000; ++i) q.push(i);
    q.close();
  });
  int expected = 0;
  while (auto v = q.pop()) {
    ASSERT_EQ(*v, expected++);
    ASSERT_LE(q.size(), 3u);
  }
  producer.join();
  EXPECT_EQ(expected, 2000);
  EXPECT_LE(q.high_water(), 3u);
}

TEST(OrderedBuffer, ReleasesInSequence) {
  OrderedBuffer<int> b(4);
  std::thread producer([&] {
    for (int s : {2, 0, 3, 1}) b.push(static_cast<std::uint64_t>(s), s * 10);
    for (int s = 4; s < 50; ++s) b.push(static_cast<std::uint64_t>(s), s * 10);
    b.close();
  });
  int next = 0;
  while (auto v = b.pop_next()) {
    ASSERT_EQ(*v, next * 10);
    ++next;
  }
  producer.join();
  EXPECT_EQ(next, 50);
  EXPECT_LE(b.high_water(), 4u);
}

TEST(OrderedBuffer, CloseWithGap) {
  OrderedBuffer<int> b(4);
  b.push(1, 1);
  b.close();
  EXPECT_FALSE(b.pop_next().has_value());
}

TEST(ComputeBudget, HighPriorityServedFirst) {
  ComputeBudget budget(1);
  budget.acquire(ComputeBudget::Priority::Low);
  std::vector<int> order;
  std::mutex m;
  std::thread low([&] {
    ComputeBudget::Slot s(budget, ComputeBudget::Priority::Low);
    std::lock_guard lock(m);
    order.push_back(0);
  });
  std::this_thread::sleep_for(30ms);
  std::thread high([&] {
    ComputeBudget::Slot s(budget, ComputeBudget::Priority::High);
    std::lock_guard lock(m);
    order.push_back(1);
  });
  std::this_thread::sleep_for(30ms);
  budget.release();
  low.join();
  high.join();
  ASSERT_EQ(order.size(), 2u);
  EXPECT_EQ(order[0], 1);
}

TEST(AcceptOrReject, Examples) {
  const RansacConfig cfg;
  int retries = 0;
  auto no_retry = [&]() -> std::optional<RansacResult> {
    ++retries;
    return std::nullopt;
  };
  AlignmentDecision d = accept_or_reject(result(100, 0.8), no_retry, cfg);
  EXPECT_TRUE(d.accepted);
  EXPECT_FALSE(d.via_keyframe);
  EXPECT_EQ(retries, 0);

  d = accept_or_reject(std::nullopt, no_retry, cfg);
  EXPECT_FALSE(d.accepted);
  EXPECT_EQ(retries, 1);

  d = accept_or_reject(result(20, 4.5), [] { return std::optional<RansacResult>(result(80, 1.0)); }, cfg);
  EXPECT_TRUE(d.accepted);
  EXPECT_TRUE(d.via_keyframe);
  EXPECT_EQ(d.result->inlier_count, 80);
}

TEST(AcceptOrReject, Gates) {
  const RansacConfig cfg;
  EXPECT_TRUE(accept_result(result(15, 3.0), cfg));
  EXPECT_FALSE(accept_result(result(14, 0.5), cfg));
  EXPECT_FALSE(accept_result(result(200, 3.01), cfg));
  EXPECT_FALSE(accept_result(std::nullopt, cfg));
}

TEST(SnapshotPolicy, Due) {
  EXPECT_FALSE(snapshot_due(0, 1));
  for (int k = 1; k <= 3; ++k) EXPECT_TRUE(snapshot_due(k, 1));
  std::vector<int> due;
  for (int k = 1; k <= 12; ++k)
    if (snapshot_due(k, 5)) due.push_back(k);
  EXPECT_EQ(due, (std::vector<int>{5, 10}));
}

TEST(Sources, DirectoryOrderAndFilter) {
  oracle::TempDir dir("src");
  save_image(dir.path() / "b.png", ImageGray(4, 4, 2));
  save_image(dir.path() / "a.pgm", ImageGray(4, 4, 1));
  save_image(dir.path() / "c.PNG", ImageGray(4, 4, 3));
  std::ofstream(dir.path() / "notes.txt") << "x";
  const DirectorySource src(dir.path());
  ASSERT_EQ(src.size(), 3u);
  EXPECT_EQ(src.load(0)(0, 0), 1);
  EXPECT_EQ(src.load(1)(0, 0), 2);
  EXPECT_EQ(src.load(2)(0, 0), 3);
  EXPECT_THROW(DirectorySource(dir.path() / "missing"), Error);
}

TEST(Sources, MemoryEmptyFrameIsUnreadable) {
  const MemorySource src({ImageGray(2, 2, 0), ImageGray()});
  EXPECT_EQ(src.load(0).width(), 2);
  EXPECT_THROW(src.load(1), Error);
}

TEST(Pipeline, InvalidConfig) {
  RunConfig cfg;
  cfg.pipeline.workers = 0;
  try {
    run_pipeline(MemorySource({}), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
}

TEST(Pipeline, EmptySource) {
  for (RunMode mode : {RunMode::Concurrent, RunMode::Sequential}) {
    const PipelineResult r = run_pipeline(MemorySource({}), small_config(), mode);
    EXPECT_TRUE(r.telemetry.per_frame.empty());
    EXPECT_EQ(r.telemetry.fps, 0.0);
    EXPECT_TRUE(r.poses.empty());
    EXPECT_TRUE(r.canvas.used_bounds().empty());
  }
}

TEST(Pipeline, SingleFrameBecomesAnchor) {
  const ImageGray frame = small_flight(1)[0];
  const PipelineResult r = run_pipeline(MemorySource({frame}), small_config());
  ASSERT_EQ(r.telemetry.per_frame.size(), 1u);
  EXPECT_EQ(r.telemetry.per_frame[0].reason, "anchor");
  EXPECT_EQ(r.telemetry.per_frame[0].status, TicketStatus::Accepted);
  ASSERT_EQ(r.poses.size(), 1u);
  EXPECT_EQ(r.poses[0].to_anchor.matrix(), Mat3::Identity());
  const Snapshot s = r.canvas.render();
  ASSERT_EQ(s.image.width(), frame.width());
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x)
      if (feather_weight(x, y, frame.width(), frame.height()) >= kCoverageWeight) {
        ASSERT_LE(std::abs(s.image(x, y) - frame(x, y)), 1);
      }
}

TEST(Pipeline, TicketsConservedWithBadFrames) {
  std::vector<ImageGray> frames = small_flight(8);
  frames[3] = ImageGray();                          // unreadable
  frames[5] = oracle::blob_texture(320, 240, 99);   // unrelated content
  for (RunMode mode : {RunMode::Concurrent, RunMode::Sequential}) {
    const PipelineResult r = run_pipeline(MemorySource(frames), small_config(), mode);
    const Telemetry& t = r.telemetry;
    ASSERT_EQ(t.per_frame.size(), frames.size());
    EXPECT_EQ(t.accepted + t.rejected, static_cast<int>(frames.size()));
    EXPECT_EQ(r.poses.size(), frames.size());
    for (std::size_t i = 0; i < t.per_frame.size(); ++i) {
      EXPECT_EQ(t.per_frame[i].frame_id, static_cast<std::int64_t>(i));
      EXPECT_NE(t.per_frame[i].status, TicketStatus::Pending);
    }
    EXPECT_EQ(t.per_frame[3].reason, "io");
    EXPECT_EQ(t.io_errors.size(), 1u);
    EXPECT_EQ(t.per_frame[5].reason, "alignment");
    EXPECT_FALSE(r.poses[5].accepted);
    EXPECT_EQ(count_reason(t, "anchor"), 1);
    // Frame 4 follows an unreadable frame and still aligns with frame 2.
    EXPECT_EQ(t.per_frame[4].status, TicketStatus::Accepted);
    EXPECT_EQ(t.per_frame[4].matched_against, 2);
  }
}

TEST(Pipeline, DropModeConservesTickets) {
  RunConfig cfg = small_config();
  cfg.pipeline.drop_when_full = true;
  cfg.pipeline.queue_cap = 1;
  cfg.pipeline.workers = 1;
  const std::vector<ImageGray> frames = small_flight(10);
  const PipelineResult r = run_pipeline(MemorySource(frames), cfg);
  const Telemetry& t = r.telemetry;
  ASSERT_EQ(t.per_frame.size(), frames.size());
  EXPECT_EQ(t.accepted + t.rejected, 10);
  EXPECT_EQ(t.accepted + count_reason(t, "dropped") + count_reason(t, "alignment"), 10);
  EXPECT_LE(t.max_queue_occupancy, 10u);
}

TEST(Pipeline, TelemetryConsistent) {
  const PipelineResult r = run_pipeline(MemorySource(small_flight(6)), small_config());
  const Telemetry& t = r.telemetry;
  EXPECT_GT(t.elapsed_s, 0.0);
  EXPECT_NEAR(t.fps, t.per_frame.size() / t.elapsed_s, 1e-9);
  EXPECT_GE(t.latency_mean_ms, 0.0);
  EXPECT_GE(t.latency_p95_ms, t.latency_mean_ms * 0.5);
  EXPECT_LE(t.max_queue_occupancy, static_cast<std::size_t>(small_config().pipeline.queue_cap));
  EXPECT_GT(t.mean_matches, 0.0);
  EXPECT_GT(t.mean_inlier_ratio, 0.0);
  EXPECT_LE(t.mean_inlier_ratio, 1.0);
  for (const auto& f : t.per_frame) {
    ASSERT_EQ(f.status, TicketStatus::Accepted);
    for (int s = 1; s < kStageCount; ++s) EXPECT_GE(f.stamps_ms[s], f.stamps_ms[s - 1]);
    EXPECT_GE(f.stamps_ms[0], 0.0);
  }
  std::vector<double> lat;
  for (const auto& f : t.per_frame) lat.push_back(f.stamp(Stage::Composited) - f.stamp(Stage::Ingest));
  std::sort(lat.begin(), lat.end());
  const std::size_t rank = static_cast<std::size_t>(std::ceil(0.95 * lat.size()));
  EXPECT_DOUBLE_EQ(t.latency_p95_ms, lat[rank - 1]);
}

TEST(Pipeline, TelemetryArtifacts) {
  oracle::TempDir dir("artifacts");
  std::vector<ImageGray> frames = small_flight(4);
  frames[3] = ImageGray();
  RunConfig cfg = small_config();
  const PipelineResult r = run_pipeline(MemorySource(frames), cfg);
  write_run_artifacts(dir.path(), r, cfg);

  std::ifstream csv(dir.path() / "frames.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "frameId,status,msPerStage,inliers,rms");
  int rows = 0;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 5u) << line;
    EXPECT_EQ(std::stoi(cells[0]), rows);
    if (rows == 3) {
      EXPECT_EQ(cells[1], "rejected(io)");
    } else {
      EXPECT_EQ(cells[1], "accepted");
    }
    ++rows;
  }
  EXPECT_EQ(rows, 4);

  std::ifstream tj(dir.path() / "telemetry.json");
  const auto j = nlohmann::json::parse(tj);
  for (const char* key : {"fps", "endToEndLatencyMs", "perStageMs", "matchStats", "perFrame"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j.at("perFrame").size(), 4u);
  EXPECT_TRUE(j.at("endToEndLatencyMs").contains("p95"));

  std::ifstream pj(dir.path() / "poses.json");
  const auto p = nlohmann::json::parse(pj);
  EXPECT_EQ(p.at("frames").size(), 4u);
  EXPECT_EQ(p.at("frames")[3].at("accepted"), false);
  EXPECT_EQ(p.at("frames")[1].at("toAnchor").size(), 9u);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "config.json"));
}

TEST(Pipeline, SnapshotsEveryK) {
  struct Case {
    int frames;
    int every;
    std::vector<std::string> interim;
  };
  const std::vector<Case> cases{{3, 1, {"map_000000.png", "map_000001.png", "map_000002.png"}},
                                {12, 5, {"map_000004.png", "map_000009.png"}}};
  for (const Case& c : cases) {
    oracle::TempDir dir("snap");
    RunConfig cfg = small_config();
    cfg.pipeline.snapshot_every = c.every;
    cfg.output.dir = dir.path().string();
    const PipelineResult r = run_pipeline(MemorySource(small_flight(c.frames)), cfg);
    ASSERT_EQ(r.telemetry.accepted, c.frames);
    std::vector<std::string> expected = c.interim;
    expected.push_back("map_final.png");
    std::vector<std::string> pngs;
    for (const auto& f : files_in(dir.path(), "map_"))
      if (f.ends_with(".png") && !f.ends_with("_coverage.png")) pngs.push_back(f);
    EXPECT_EQ(pngs, expected);
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "map_final.json"));
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "map_final_coverage.png"));
    EXPECT_EQ(r.snapshots.size(), expected.size());
  }
}

TEST(Pipeline, NoAcceptedFramesWritesFinalOnly) {
  oracle::TempDir dir("snap0");
  RunConfig cfg = small_config();
  cfg.pipeline.snapshot_every = 1;
  cfg.output.dir = dir.path().string();
  const PipelineResult r = run_pipeline(MemorySource({ImageGray(), ImageGray()}), cfg);
  EXPECT_EQ(r.telemetry.accepted, 0);
  EXPECT_EQ(r.telemetry.rejected, 2);
  std::vector<std::string> pngs;
  for (const auto& f : files_in(dir.path(), "map_"))
    if (f.ends_with(".png") && !f.ends_with("_coverage.png")) pngs.push_back(f);
  EXPECT_EQ(pngs, std::vector<std::string>{"map_final.png"});
}

// Default configuration on a 20-frame 640x480 flight: the concurrent
// pipeline and the single-threaded reference agree bit for bit.
TEST(Pipeline, ConcurrentMatchesSequential) {
  const ImageGray src = make_reference_texture(2200, 1400, 7);
  const auto seq = generate_sequence(src, FlightConfig{});
  const MemorySource source(seq.images());
  RunConfig cfg;
  cfg.pipeline.workers = 4;
  const PipelineResult a = run_pipeline(source, cfg, RunMode::Concurrent);
  const PipelineResult b = run_pipeline(source, cfg, RunMode::Sequential);
  const Snapshot sa = a.canvas.render(), sb = b.canvas.render();
  EXPECT_EQ(sa.image, sb.image);
  EXPECT_EQ(sa.origin_x, sb.origin_x);
  EXPECT_EQ(sa.origin_y, sb.origin_y);
  ASSERT_EQ(a.poses.size(), 20u);
  ASSERT_EQ(b.poses.size(), 20u);
  for (std::size_t i = 0; i < a.poses.size(); ++i) {
    EXPECT_EQ(a.poses[i].accepted, b.poses[i].accepted);
    EXPECT_EQ(a.poses[i].to_anchor.matrix(), b.poses[i].to_anchor.matrix());
    EXPECT_EQ(a.telemetry.per_frame[i].reason, b.telemetry.per_frame[i].reason);
    EXPECT_EQ(a.telemetry.per_frame[i].inliers, b.telemetry.per_frame[i].inliers);
  }
  EXPECT_GE(a.telemetry.accepted, 18);
}
