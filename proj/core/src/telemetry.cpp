#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aeromap/error.hpp"
#include "aeromap/pipeline.hpp"

namespace aeromap {

using nlohmann::json;

namespace {

const char* status_name(TicketStatus s) {
  switch (s) {
    case TicketStatus::Accepted: return "accepted";
    case TicketStatus::Rejected: return "rejected";
    case TicketStatus::Pending: break;
  }
  return "pending";
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Nearest-rank percentile.
double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

double stage_delta(const FrameTicket& t, int k) {
  const double a = t.stamps_ms[k - 1];
  const double b = t.stamps_ms[k];
  return (a >= 0.0 && b >= 0.0) ? b - a : -1.0;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

}  // namespace

void finalize_telemetry(Telemetry& t) {
  std::sort(t.per_frame.begin(), t.per_frame.end(),
            [](const FrameTicket& a, const FrameTicket& b) { return a.frame_id < b.frame_id; });
  t.accepted = 0;
  t.rejected = 0;
  std::vector<double> latency;
  std::array<std::vector<double>, kStageCount - 1> stages;
  std::vector<double> matches;
  std::vector<double> ratios;
  for (const FrameTicket& f : t.per_frame) {
    if (f.status == TicketStatus::Accepted) ++t.accepted;
    if (f.status == TicketStatus::Rejected) ++t.rejected;
    const double in = f.stamp(Stage::Ingest);
    const double out = f.stamp(Stage::Composited);
    if (in >= 0.0 && out >= 0.0) latency.push_back(out - in);
    for (int k = 1; k < kStageCount; ++k) {
      const double d = stage_delta(f, k);
      if (d >= 0.0) stages[k - 1].push_back(d);
    }
    if (f.matched_against >= 0) {
      matches.push_back(f.matches);
      if (f.matches > 0) ratios.push_back(static_cast<double>(f.inliers) / f.matches);
    }
  }
  t.fps = t.elapsed_s > 0.0 ? static_cast<double>(t.per_frame.size()) / t.elapsed_s : 0.0;
  t.latency_mean_ms = mean(latency);
  t.latency_p95_ms = percentile(latency, 95.0);
  for (int k = 0; k < kStageCount - 1; ++k) t.per_stage_ms[k] = mean(stages[k]);
  t.mean_matches = mean(matches);
  t.mean_inlier_ratio = mean(ratios);
}

std::string telemetry_to_json(const Telemetry& t) {
  static const char* kStageNames[kStageCount] = {"ingest", "preprocessed", "detected", "matched",
                                                 "composited"};
  json frames = json::array();
  for (const FrameTicket& f : t.per_frame) {
    json stamps = json::object();
    for (int k = 0; k < kStageCount; ++k) {
      stamps[kStageNames[k]] = f.stamps_ms[k] >= 0.0 ? json(f.stamps_ms[k]) : json(nullptr);
    }
    frames.push_back({{"frameId", f.frame_id},
                      {"path", f.path},
                      {"status", status_name(f.status)},
                      {"reason", f.reason},
                      {"stampsMs", stamps},
                      {"matches", f.matches},
                      {"inliers", f.inliers},
                      {"rms", f.rms},
                      {"matchedAgainst", f.matched_against}});
  }
  json j = {
      {"fps", t.fps},
      {"elapsedS", t.elapsed_s},
      {"endToEndLatencyMs", {{"mean", t.latency_mean_ms}, {"p95", t.latency_p95_ms}}},
      {"perStageMs",
       {{"preprocess", t.per_stage_ms[0]},
        {"detect", t.per_stage_ms[1]},
        {"match", t.per_stage_ms[2]},
        {"composite", t.per_stage_ms[3]}}},
      {"matchStats", {{"meanMatches", t.mean_matches}, {"meanInlierRatio", t.mean_inlier_ratio}}},
      {"accepted", t.accepted},
      {"rejected", t.rejected},
      {"maxQueueOccupancy", t.max_queue_occupancy},
      {"ioErrors", t.io_errors},
      {"perFrame", frames},
  };
  return j.dump(2);
}

std::string frames_csv(const Telemetry& t) {
  std::ostringstream os;
  os << "frameId,status,msPerStage,inliers,rms\n";
  for (const FrameTicket& f : t.per_frame) {
    os << f.frame_id << ',' << status_name(f.status);
    if (f.status == TicketStatus::Rejected && !f.reason.empty()) os << '(' << f.reason << ')';
    os << ',';
    for (int k = 1; k < kStageCount; ++k) {
      if (k > 1) os << ';';
      const double d = stage_delta(f, k);
      if (d >= 0.0) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", d);
        os << buf;
      }
    }
    char rms[32];
    std::snprintf(rms, sizeof rms, "%.4f", f.rms);
    os << ',' << f.inliers << ',' << rms << '\n';
  }
  return os.str();
}

void write_run_artifacts(const std::filesystem::path& dir, const PipelineResult& result,
                         const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "telemetry.json", telemetry_to_json(result.telemetry));
  write_text(dir / "frames.csv", frames_csv(result.telemetry));
  json poses = json::array();
  for (const FramePose& p : result.poses) {
    poses.push_back({{"frameId", p.frame_id},
                     {"accepted", p.accepted},
                     {"toAnchor", p.to_anchor.row_major()}});
  }
  const json pj = {{"workingWidth", result.working_width},
                   {"workingHeight", result.working_height},
                   {"frames", poses}};
  write_text(dir / "poses.json", pj.dump(2));
  write_text(dir / "config.json", run_config_to_json(cfg));
}

}  // namespace aeromap
