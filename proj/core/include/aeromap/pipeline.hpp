#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aeromap/config.hpp"
#include "aeromap/image.hpp"
#include "aeromap/mosaic.hpp"

namespace aeromap {

/// Ordered source of frames. load() may be called from a reader thread.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t size() const = 0;
  virtual std::string label(std::size_t index) const = 0;
  /// Throws on unreadable input.
  virtual ImageGray load(std::size_t index) const = 0;
};

/// PGM/PNG files of a directory, in lexicographic filename order.
class DirectorySource final : public FrameSource {
 public:
  explicit DirectorySource(const std::filesystem::path& dir);
  std::size_t size() const override { return files_.size(); }
  std::string label(std::size_t index) const override { return files_[index].string(); }
  ImageGray load(std::size_t index) const override;

 private:
  std::vector<std::filesystem::path> files_;
};

/// Frames already in memory. An empty image stands for an unreadable frame.
class MemorySource final : public FrameSource {
 public:
  explicit MemorySource(std::vector<ImageGray> frames) : frames_(std::move(frames)) {}
  std::size_t size() const override { return frames_.size(); }
  std::string label(std::size_t index) const override;
  ImageGray load(std::size_t index) const override;

 private:
  std::vector<ImageGray> frames_;
};

enum class Stage { Ingest = 0, Preprocessed, Detected, Matched, Composited };
inline constexpr int kStageCount = 5;

enum class TicketStatus { Pending, Accepted, Rejected };

struct FrameTicket {
  std::int64_t frame_id = 0;
  std::string path;
  /// Milliseconds since run start; negative when the stage was not reached.
  std::array<double, kStageCount> stamps_ms{-1.0, -1.0, -1.0, -1.0, -1.0};
  TicketStatus status = TicketStatus::Pending;
  std::string reason;  // io | alignment | dropped | anchor | previous | keyframe
  int matches = 0;
  int inliers = 0;
  double rms = 0.0;
  std::int64_t matched_against = -1;

  void stamp(Stage s, double ms) { stamps_ms[static_cast<int>(s)] = ms; }
  double stamp(Stage s) const { return stamps_ms[static_cast<int>(s)]; }
};

/// Alignment decision for one frame.
struct AlignmentDecision {
  bool accepted = false;
  bool via_keyframe = false;
  std::optional<RansacResult> result;
};

/// Accept iff RANSAC reached consensus with inlierCount >= min_inliers and
/// rms <= max_rms. `retry` is consulted only when the first attempt fails.
bool accept_result(const std::optional<RansacResult>& r, const RansacConfig& cfg);

AlignmentDecision accept_or_reject(
    const std::optional<RansacResult>& vs_previous,
    const std::function<std::optional<RansacResult>()>& retry_keyframe,
    const RansacConfig& cfg);

/// Frame ids (1-based accepted counts) at which an interim snapshot is due.
bool snapshot_due(int accepted_count, int every);

struct Telemetry {
  std::vector<FrameTicket> per_frame;
  double elapsed_s = 0.0;
  double fps = 0.0;
  double latency_mean_ms = 0.0;
  double latency_p95_ms = 0.0;
  std::array<double, kStageCount - 1> per_stage_ms{};  // preprocess, detect, match, composite
  double mean_matches = 0.0;
  double mean_inlier_ratio = 0.0;
  int accepted = 0;
  int rejected = 0;
  std::size_t max_queue_occupancy = 0;
  std::vector<std::string> io_errors;
};

void finalize_telemetry(Telemetry& t);

std::string telemetry_to_json(const Telemetry& t);
std::string frames_csv(const Telemetry& t);

/// Surviving matches of one frame against the frame it was aligned to, in
/// working-resolution pixel coordinates (src = this frame).
struct FrameMatches {
  std::int64_t frame_id = 0;
  std::int64_t target_id = -1;
  std::vector<Correspondence> pairs;
};

enum class RunMode { Concurrent, Sequential };

struct PipelineResult {
  MosaicCanvas canvas;
  Telemetry telemetry;
  std::vector<FramePose> poses;  // one per ticket, in frame order
  std::vector<FrameMatches> matches;
  std::vector<std::filesystem::path> snapshots;
  int working_width = 0;
  int working_height = 0;
};

/// Runs ingest -> preprocess -> detect -> match/estimate -> composite.
/// Concurrent mode uses bounded queues and a worker pool; Sequential mode
/// runs the same stages in one thread. Both produce identical mosaics and
/// decisions. Throws Error(InvalidConfig) on an invalid configuration.
PipelineResult run_pipeline(const FrameSource& source, const RunConfig& cfg,
                            RunMode mode = RunMode::Concurrent);

/// Writes telemetry.json, frames.csv and poses.json into `dir`.
void write_run_artifacts(const std::filesystem::path& dir, const PipelineResult& result,
                         const RunConfig& cfg);

}  // namespace aeromap
