#pragma once

#include <filesystem>
#include <string>

#include "aeromap/features.hpp"
#include "aeromap/geometry.hpp"
#include "aeromap/matching.hpp"
#include "aeromap/preprocess.hpp"

namespace aeromap {

struct PipelineConfig {
  int workers = 4;
  int queue_cap = 8;
  int snapshot_every = 5;
  int paced_delay_ms = 0;
  bool drop_when_full = false;
  /// A frame becomes the keyframe when accepted with at least this many
  /// inliers.
  int keyframe_min_inliers = 40;
};

struct OutputConfig {
  std::string dir;
};

struct RunConfig {
  PreprocessConfig imaging;
  FeatureConfig features;
  MatchConfig matching;
  RansacConfig ransac;
  PipelineConfig pipeline;
  OutputConfig output;
};

/// Range checks; throws Error(InvalidConfig) naming the offending key.
void validate(const RunConfig& cfg);

/// JSON text <-> RunConfig. Missing keys keep their defaults, unknown keys
/// are rejected.
RunConfig run_config_from_json(const std::string& json_text);
std::string run_config_to_json(const RunConfig& cfg);

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace aeromap
