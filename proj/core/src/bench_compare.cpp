#include <cstdio>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "aeromap/synthbench.hpp"

namespace aeromap {

using nlohmann::json;

namespace {

struct ColumnRun {
  BenchColumn column;
  Snapshot render;
};

ColumnRun run_column(const GroundTruthSequence& seq, const RunConfig& cfg, RunMode mode,
                     std::string label) {
  const MemorySource source(seq.images());
  const PipelineResult r = run_pipeline(source, cfg, mode);
  ColumnRun out;
  BenchColumn& c = out.column;
  c.label = std::move(label);
  c.workers = mode == RunMode::Sequential ? 1 : cfg.pipeline.workers;
  c.match_precision = eval_run_matches(seq, r).precision;
  c.pairwise_err_px = eval_alignment(seq, r.poses, r.working_width, r.working_height).pairwise_mean;
  c.fps = r.telemetry.fps;
  c.latency_ms = r.telemetry.latency_mean_ms;
  c.accepted = r.telemetry.accepted;
  for (const FramePose& p : r.poses) c.poses.push_back(p.to_anchor.row_major());
  out.render = r.canvas.render();
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double ratio(double a, double b) { return b != 0.0 ? a / b : 0.0; }

}  // namespace

BenchTable bench_compare(const GroundTruthSequence& seq, const RunConfig& cfg) {
  RunConfig base = cfg;
  base.output.dir.clear();
  base.pipeline.paced_delay_ms = 0;

  BenchTable t;
  t.hardware_threads = std::thread::hardware_concurrency();
  const ColumnRun proposed = run_column(seq, base, RunMode::Concurrent, "proposed");
  const ColumnRun baseline = run_column(seq, base, RunMode::Sequential, "baseline");
  RunConfig exhaustive = base;
  exhaustive.matching.exact = true;
  const ColumnRun traditional = run_column(seq, exhaustive, RunMode::Sequential, "traditional");

  t.proposed = proposed.column;
  t.baseline = baseline.column;
  t.traditional = traditional.column;
  const Snapshot& a = proposed.render;
  const Snapshot& b = baseline.render;
  t.deterministic = t.proposed.match_precision == t.baseline.match_precision &&
                    t.proposed.pairwise_err_px == t.baseline.pairwise_err_px &&
                    t.proposed.accepted == t.baseline.accepted &&
                    t.proposed.poses == t.baseline.poses && a.image == b.image &&
                    a.origin_x == b.origin_x && a.origin_y == b.origin_y;
  return t;
}

std::string bench_table_text(const BenchTable& t) {
  std::ostringstream os;
  os << "baseline = same stages on one thread; traditional = one thread with exhaustive matching\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-26s %14s %14s %8s %14s\n", "metric",
                ("proposed(" + std::to_string(t.proposed.workers) + "w)").c_str(), "baseline(1w)",
                "ratio", "traditional");
  os << line;
  auto row = [&](const char* name, double p, double b, double tr, int digits) {
    std::snprintf(line, sizeof line, "%-26s %14s %14s %8s %14s\n", name, fixed(p, digits).c_str(),
                  fixed(b, digits).c_str(), fixed(ratio(p, b), 2).c_str(),
                  fixed(tr, digits).c_str());
    os << line;
  };
  row("match precision", t.proposed.match_precision, t.baseline.match_precision,
      t.traditional.match_precision, 4);
  row("stitching error (px)", t.proposed.pairwise_err_px, t.baseline.pairwise_err_px,
      t.traditional.pairwise_err_px, 4);
  row("processing speed (fps)", t.proposed.fps, t.baseline.fps, t.traditional.fps, 2);
  row("end-to-end latency (ms)", t.proposed.latency_ms, t.baseline.latency_ms,
      t.traditional.latency_ms, 1);
  os << "hardware threads: " << t.hardware_threads
     << ", accuracy identical across modes: " << (t.deterministic ? "yes" : "no") << '\n';
  return os.str();
}

std::string bench_table_json(const BenchTable& t) {
  auto column = [](const BenchColumn& c) {
    return json{{"label", c.label},
                {"workers", c.workers},
                {"matchPrecision", c.match_precision},
                {"pairwiseCornerErrPx", c.pairwise_err_px},
                {"fps", c.fps},
                {"latencyMs", c.latency_ms},
                {"accepted", c.accepted}};
  };
  const json j = {
      {"header", "baseline = same stages on one thread; traditional = one thread with exhaustive matching"},
      {"proposed", column(t.proposed)},
      {"baseline", column(t.baseline)},
      {"traditional", column(t.traditional)},
      {"ratio",
       {{"matchPrecision", ratio(t.proposed.match_precision, t.baseline.match_precision)},
        {"pairwiseCornerErrPx", ratio(t.proposed.pairwise_err_px, t.baseline.pairwise_err_px)},
        {"fps", t.speed_ratio()},
        {"latencyMs", ratio(t.proposed.latency_ms, t.baseline.latency_ms)}}},
      {"hardwareThreads", t.hardware_threads},
      {"deterministic", t.deterministic},
  };
  return j.dump(2);
}

}  // namespace aeromap
