#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aeromap/config.hpp"
#include "aeromap/geometry.hpp"
#include "aeromap/image.hpp"
#include "aeromap/mosaic.hpp"
#include "aeromap/pipeline.hpp"

namespace aeromap {

struct FlightConfig {
  int frames = 20;
  int width = 640;
  int height = 480;
  double overlap = 0.6;
  double max_rot_deg = 5.0;
  double max_persp_jitter = 0.0;  // |row-3 entries| in 1/px
  double brightness_jitter = 0.1;
  double noise_sigma = 2.0;
  std::uint64_t seed = 7;
};

struct GroundTruthFrame {
  std::int64_t frame_id = 0;
  std::string path;
  Homography to_anchor;  // frame -> frame 0
  Homography to_source;  // frame -> source image
  ImageGray image;       // may be empty when loaded lazily
};

struct GroundTruthSequence {
  std::string source_path;
  FlightConfig params;
  std::vector<GroundTruthFrame> frames;

  /// Frame a -> frame b ground truth.
  Homography pairwise(std::size_t a, std::size_t b) const;
  std::vector<ImageGray> images() const;
};

/// Procedural texture: checkerboard + multi-octave seeded value noise +
/// linear gradient.
ImageGray make_reference_texture(int width, int height, std::uint64_t seed);

/// Horizontal stride of the serpentine path in pixels.
int path_stride(int window, double overlap);

/// Serpentine flight over `source`. Throws SourceTooSmall.
GroundTruthSequence generate_sequence(const ImageGray& source, const FlightConfig& cfg);

/// Writes frame_NNNN.png files plus gt.json into `dir`; fills frame paths.
void save_sequence(const std::filesystem::path& dir, GroundTruthSequence& seq,
                   const std::string& source_path);

std::string ground_truth_to_json(const GroundTruthSequence& seq);

/// Parses gt.json; frame images are loaded when `load_images` is set
/// (relative paths resolve against the gt file's directory).
GroundTruthSequence load_ground_truth(const std::filesystem::path& gt_file, bool load_images);

/// Pixel-center-aligned resize map from a from_w x from_h image to to_w x to_h.
Mat3 resize_mapping(int from_w, int from_h, int to_w, int to_h);

/// Maps ground truth from original frame pixels into the working resolution
/// the pipeline runs at: S * H * S^-1, with S the pixel-center-aligned resize.
Homography to_working(const Homography& h, int frame_w, int frame_h, int work_w, int work_h);

struct MatchingEval {
  double precision = 0.0;
  std::vector<double> per_pair;
  std::vector<std::int64_t> flagged;  // frames whose pair had no surviving match
};

/// Independent detect + match over each adjacent pair; a match is correct
/// when the ground truth maps the query point within epsilon of the train
/// point.
MatchingEval eval_matching(const GroundTruthSequence& seq, const RunConfig& cfg,
                           double epsilon = 2.0);

/// Precision of matches recorded by a pipeline run.
MatchingEval eval_run_matches(const GroundTruthSequence& seq, const PipelineResult& run,
                              double epsilon = 2.0);

struct AlignmentEval {
  std::vector<double> pairwise;  // per adjacent accepted pair
  std::vector<double> chain;     // per accepted frame
  int excluded = 0;
  double pairwise_mean = 0.0;
  double chain_mean = 0.0;
  double chain_max = 0.0;
};

/// Corner-transfer errors of estimated poses (working coordinates) against
/// ground truth. Rejected frames are excluded and counted.
AlignmentEval eval_alignment(const GroundTruthSequence& seq, std::span<const FramePose> poses,
                             int work_w, int work_h);

/// Mean absolute difference between the rendered mosaic and the
/// ground-truth warped source over covered pixels. Throws EmptyOverlap.
double eval_mosaic(const GroundTruthSequence& seq, const ImageGray& source,
                   const Snapshot& snapshot, std::int64_t anchor_id, int work_w, int work_h);

struct TimingSummary {
  double fps = 0.0;
  double latency_mean_ms = 0.0;
  double latency_p95_ms = 0.0;
  int accepted = 0;
  int rejected = 0;
};

TimingSummary timing_summary(const Telemetry& t);

struct EvalReport {
  MatchingEval matching;
  AlignmentEval alignment;
  std::optional<double> mosaic_mad;
  std::optional<TimingSummary> timing;
};

std::string eval_report_to_json(const EvalReport& r);

struct BenchColumn {
  std::string label;
  int workers = 1;
  double match_precision = 0.0;
  double pairwise_err_px = 0.0;
  double fps = 0.0;
  double latency_ms = 0.0;
  int accepted = 0;
  std::vector<std::array<double, 9>> poses;
};

struct BenchTable {
  BenchColumn proposed;
  BenchColumn baseline;     // same stages, one thread
  BenchColumn traditional;  // one thread, exhaustive matcher
  unsigned hardware_threads = 0;
  /// True when accuracy columns and poses are bit-identical.
  bool deterministic = false;

  double speed_ratio() const { return baseline.fps > 0 ? proposed.fps / baseline.fps : 0.0; }
};

/// Runs the pipeline concurrently with cfg.pipeline.workers, then the
/// single-threaded sequential reference, then the single-threaded
/// exhaustive-matching configuration, one after the other.
BenchTable bench_compare(const GroundTruthSequence& seq, const RunConfig& cfg);

std::string bench_table_text(const BenchTable& t);
std::string bench_table_json(const BenchTable& t);

}  // namespace aeromap
