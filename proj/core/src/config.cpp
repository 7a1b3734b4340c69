#include "aeromap/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aeromap/error.hpp"

namespace aeromap {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

void reject_unknown(const json& obj, const std::string& section,
                    const std::set<std::string>& allowed) {
  if (!obj.is_object()) bad("'" + section + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) bad("unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& section) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad("wrong type for '" + section + "." + key + "'");
  }
}

void check(bool ok, const std::string& what) {
  if (!ok) bad(what);
}

}  // namespace

void validate(const RunConfig& c) {
  check(c.imaging.target_width >= 16 && c.imaging.target_height >= 16,
        "imaging.targetW/targetH must be >= 16");
  check(c.imaging.blur_sigma >= 0.0 && c.imaging.blur_sigma <= 10.0,
        "imaging.blurSigma must be in [0, 10]");
  check(c.features.n_features >= 1, "features.nFeatures must be >= 1");
  check(c.features.fast_threshold >= 1 && c.features.fast_threshold <= 255,
        "features.fastThreshold must be in [1, 255]");
  check(c.features.scale_factor > 1.0 && c.features.scale_factor <= 4.0,
        "features.scaleFactor must be in (1, 4]");
  check(c.features.n_levels >= 1 && c.features.n_levels <= 32, "features.nLevels must be in [1, 32]");
  check(c.matching.n_tables >= 1 && c.matching.n_tables <= 64, "matching.nTables must be in [1, 64]");
  check(c.matching.key_bits == kIndexKeyBits, "matching.keyBits is fixed at 16");
  check(c.matching.ratio > 0.0 && c.matching.ratio < 1.0, "matching.ratio must be in (0, 1)");
  check(c.ransac.thresh > 0.0, "ransac.thresh must be > 0");
  check(c.ransac.conf > 0.0 && c.ransac.conf < 1.0, "ransac.conf must be in (0, 1)");
  check(c.ransac.max_iters >= 1, "ransac.maxIters must be >= 1");
  check(c.ransac.min_inliers >= 4, "ransac.minInliers must be >= 4");
  check(c.ransac.max_rms > 0.0, "ransac.maxRms must be > 0");
  check(c.pipeline.workers >= 1 && c.pipeline.workers <= 256, "pipeline.workers must be in [1, 256]");
  check(c.pipeline.queue_cap >= 1, "pipeline.queueCap must be >= 1");
  check(c.pipeline.snapshot_every >= 1, "pipeline.snapshotEvery must be >= 1");
  check(c.pipeline.paced_delay_ms >= 0, "pipeline.pacedDelayMs must be >= 0");
  check(c.pipeline.keyframe_min_inliers >= 4, "pipeline.keyframeMinInliers must be >= 4");
}

RunConfig run_config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root, "config", {"imaging", "features", "matching", "ransac", "pipeline", "output"});

  RunConfig c;
  if (root.contains("imaging")) {
    const json& j = root["imaging"];
    reject_unknown(j, "imaging", {"targetW", "targetH", "blurSigma", "equalize"});
    read(j, "targetW", c.imaging.target_width, "imaging");
    read(j, "targetH", c.imaging.target_height, "imaging");
    read(j, "blurSigma", c.imaging.blur_sigma, "imaging");
    read(j, "equalize", c.imaging.equalize, "imaging");
  }
  if (root.contains("features")) {
    const json& j = root["features"];
    reject_unknown(j, "features", {"nFeatures", "fastThreshold", "scaleFactor", "nLevels", "seed"});
    read(j, "nFeatures", c.features.n_features, "features");
    read(j, "fastThreshold", c.features.fast_threshold, "features");
    read(j, "scaleFactor", c.features.scale_factor, "features");
    read(j, "nLevels", c.features.n_levels, "features");
    read(j, "seed", c.features.seed, "features");
  }
  if (root.contains("matching")) {
    const json& j = root["matching"];
    reject_unknown(j, "matching", {"nTables", "keyBits", "ratio", "crossCheck", "seed", "exact"});
    read(j, "nTables", c.matching.n_tables, "matching");
    read(j, "keyBits", c.matching.key_bits, "matching");
    read(j, "ratio", c.matching.ratio, "matching");
    read(j, "crossCheck", c.matching.cross_check, "matching");
    read(j, "seed", c.matching.seed, "matching");
    read(j, "exact", c.matching.exact, "matching");
  }
  if (root.contains("ransac")) {
    const json& j = root["ransac"];
    reject_unknown(j, "ransac", {"thresh", "conf", "maxIters", "minInliers", "maxRms", "seed"});
    read(j, "thresh", c.ransac.thresh, "ransac");
    read(j, "conf", c.ransac.conf, "ransac");
    read(j, "maxIters", c.ransac.max_iters, "ransac");
    read(j, "minInliers", c.ransac.min_inliers, "ransac");
    read(j, "maxRms", c.ransac.max_rms, "ransac");
    read(j, "seed", c.ransac.seed, "ransac");
  }
  if (root.contains("pipeline")) {
    const json& j = root["pipeline"];
    reject_unknown(j, "pipeline", {"workers", "queueCap", "snapshotEvery", "pacedDelayMs",
                                   "dropWhenFull", "keyframeMinInliers"});
    read(j, "workers", c.pipeline.workers, "pipeline");
    read(j, "queueCap", c.pipeline.queue_cap, "pipeline");
    read(j, "snapshotEvery", c.pipeline.snapshot_every, "pipeline");
    read(j, "pacedDelayMs", c.pipeline.paced_delay_ms, "pipeline");
    read(j, "dropWhenFull", c.pipeline.drop_when_full, "pipeline");
    read(j, "keyframeMinInliers", c.pipeline.keyframe_min_inliers, "pipeline");
  }
  if (root.contains("output")) {
    const json& j = root["output"];
    reject_unknown(j, "output", {"dir"});
    read(j, "dir", c.output.dir, "output");
  }
  validate(c);
  return c;
}

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["imaging"] = {{"targetW", c.imaging.target_width},
                  {"targetH", c.imaging.target_height},
                  {"blurSigma", c.imaging.blur_sigma},
                  {"equalize", c.imaging.equalize}};
  j["features"] = {{"nFeatures", c.features.n_features},
                   {"fastThreshold", c.features.fast_threshold},
                   {"scaleFactor", c.features.scale_factor},
                   {"nLevels", c.features.n_levels},
                   {"seed", c.features.seed}};
  j["matching"] = {{"nTables", c.matching.n_tables}, {"keyBits", c.matching.key_bits},
                   {"ratio", c.matching.ratio},      {"crossCheck", c.matching.cross_check},
                   {"seed", c.matching.seed},        {"exact", c.matching.exact}};
  j["ransac"] = {{"thresh", c.ransac.thresh},         {"conf", c.ransac.conf},
                 {"maxIters", c.ransac.max_iters},    {"minInliers", c.ransac.min_inliers},
                 {"maxRms", c.ransac.max_rms},        {"seed", c.ransac.seed}};
  j["pipeline"] = {{"workers", c.pipeline.workers},
                   {"queueCap", c.pipeline.queue_cap},
                   {"snapshotEvery", c.pipeline.snapshot_every},
                   {"pacedDelayMs", c.pipeline.paced_delay_ms},
                   {"dropWhenFull", c.pipeline.drop_when_full},
                   {"keyframeMinInliers", c.pipeline.keyframe_min_inliers}};
  j["output"] = {{"dir", c.output.dir}};
  return j.dump(2);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return run_config_from_json(ss.str());
}

}  // namespace aeromap
