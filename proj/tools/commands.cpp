#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "aeromap/config.hpp"
#include "aeromap/error.hpp"
#include "aeromap/image_io.hpp"
#include "aeromap/log.hpp"
#include "aeromap/pipeline.hpp"
#include "aeromap/synthbench.hpp"

namespace aeromap::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct StitchArgs {
  std::string input;
  std::string out;
  std::string config;
  std::optional<int> workers;
  std::optional<int> paced_ms;
  std::optional<int> snapshot_every;
  bool sequential = false;
};

struct SynthArgs {
  std::string source;
  std::optional<int> procedural;
  std::string out;
  FlightConfig flight;
};

struct EvalArgs {
  std::string gt;
  std::string run;
};

struct BenchArgs {
  std::string gt;
  std::string config;
  std::optional<int> workers;
  std::string out;
};

json read_json(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "missing " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "malformed " + p.string() + ": " + e.what());
  }
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out << text << '\n';
}

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

int cmd_stitch(const StitchArgs& a, std::ostream& out) {
  RunConfig cfg = config_or_default(a.config);
  if (a.workers) cfg.pipeline.workers = *a.workers;
  if (a.paced_ms) cfg.pipeline.paced_delay_ms = *a.paced_ms;
  if (a.snapshot_every) cfg.pipeline.snapshot_every = *a.snapshot_every;
  cfg.output.dir = a.out;
  validate(cfg);

  const DirectorySource source(a.input);
  if (source.size() == 0) throw Error(ErrorCode::FileNotFound, "no input frames in " + a.input);

  const PipelineResult r =
      run_pipeline(source, cfg, a.sequential ? RunMode::Sequential : RunMode::Concurrent);
  write_run_artifacts(a.out, r, cfg);

  const Telemetry& t = r.telemetry;
  out << "frames " << t.per_frame.size() << ", accepted " << t.accepted << ", rejected "
      << t.rejected << ", snapshots " << r.snapshots.size() << '\n';
  out << "fps " << t.fps << ", latency mean " << t.latency_mean_ms << " ms, p95 "
      << t.latency_p95_ms << " ms\n";
  if (t.accepted == 0) {
    out << "all frames rejected\n";
    return kExitAllRejected;
  }
  return kExitOk;
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  ImageGray source;
  std::string source_path = a.source;
  if (a.procedural) {
    source = make_reference_texture(*a.procedural, *a.procedural, a.flight.seed);
    fs::create_directories(fs::path(a.out) / "source");
    source_path = (fs::path(a.out) / "source" / "source.png").string();
    save_image(source_path, source);
  } else {
    if (a.source.empty()) throw Error(ErrorCode::InvalidConfig, "--source or --procedural required");
    source = load_image(a.source);
  }
  GroundTruthSequence seq;
  try {
    seq = generate_sequence(source, a.flight);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SourceTooSmall) {
      throw Error(ErrorCode::SourceTooSmall, std::string("source too small: ") + e.what());
    }
    throw;
  }
  save_sequence(a.out, seq, fs::absolute(source_path).string());
  out << "wrote " << seq.frames.size() << " frames and gt.json to " << a.out << '\n';
  return kExitOk;
}

std::optional<Snapshot> load_final_snapshot(const fs::path& run) {
  const fs::path img = run / "map_final.png";
  const fs::path cov = run / "map_final_coverage.png";
  const fs::path side = run / "map_final.json";
  if (!fs::exists(img) || !fs::exists(cov) || !fs::exists(side)) return std::nullopt;
  Snapshot s;
  s.image = load_image(img);
  s.coverage = load_image(cov);
  const json j = read_json(side);
  s.origin_x = j.at("originX").get<int>();
  s.origin_y = j.at("originY").get<int>();
  s.frame_id = j.at("frameId").get<std::int64_t>();
  return s;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const fs::path run(a.run);
  const GroundTruthSequence seq = load_ground_truth(a.gt, true);
  const json pj = read_json(run / "poses.json");
  RunConfig cfg;
  if (fs::exists(run / "config.json")) cfg = load_run_config(run / "config.json");

  std::vector<FramePose> poses;
  try {
    for (const json& f : pj.at("frames")) {
      FramePose p;
      p.frame_id = f.at("frameId").get<std::int64_t>();
      p.accepted = f.at("accepted").get<bool>();
      p.to_anchor = Homography::from_row_major(f.at("toAnchor").get<std::vector<double>>());
      poses.push_back(p);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed poses.json: ") + e.what());
  }
  const int work_w = pj.value("workingWidth", seq.params.width);
  const int work_h = pj.value("workingHeight", seq.params.height);

  EvalReport report;
  report.alignment = eval_alignment(seq, poses, work_w, work_h);
  report.matching = eval_matching(seq, cfg);

  if (auto snap = load_final_snapshot(run)) {
    fs::path src(seq.source_path);
    if (src.is_relative()) src = fs::path(a.gt).parent_path() / src;
    std::int64_t anchor = -1;
    for (const FramePose& p : poses) {
      if (p.accepted) {
        anchor = p.frame_id;
        break;
      }
    }
    if (fs::exists(src) && anchor >= 0) {
      report.mosaic_mad = eval_mosaic(seq, load_image(src), *snap, anchor, work_w, work_h);
    } else {
      log::warn("mosaic fidelity skipped: source image unavailable");
    }
  }
  if (fs::exists(run / "telemetry.json")) {
    const json tj = read_json(run / "telemetry.json");
    TimingSummary ts;
    ts.fps = tj.value("fps", 0.0);
    ts.latency_mean_ms = tj.at("endToEndLatencyMs").value("mean", 0.0);
    ts.latency_p95_ms = tj.at("endToEndLatencyMs").value("p95", 0.0);
    ts.accepted = tj.value("accepted", 0);
    ts.rejected = tj.value("rejected", 0);
    report.timing = ts;
  }
  write_file(run / "report.json", eval_report_to_json(report));

  out << "match precision: " << report.matching.precision << '\n';
  out << "pairwise corner error (px): " << report.alignment.pairwise_mean << '\n';
  out << "chain corner error (px): mean " << report.alignment.chain_mean << ", max "
      << report.alignment.chain_max << ", excluded " << report.alignment.excluded << '\n';
  if (report.mosaic_mad) out << "mosaic MAD: " << *report.mosaic_mad << '\n';
  if (report.timing) {
    out << "fps: " << report.timing->fps << ", latency mean (ms): "
        << report.timing->latency_mean_ms << '\n';
  }
  return kExitOk;
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  RunConfig cfg = config_or_default(a.config);
  if (a.workers) cfg.pipeline.workers = *a.workers;
  validate(cfg);
  const GroundTruthSequence seq = load_ground_truth(a.gt, true);
  const BenchTable t = bench_compare(seq, cfg);
  out << bench_table_text(t);
  const fs::path dir = a.out.empty() ? fs::path(a.gt).parent_path() : fs::path(a.out);
  if (!dir.empty()) fs::create_directories(dir);
  write_file(dir / "bench.json", bench_table_json(t));
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Incremental aerial mosaicking", "aeromap"};
  app.require_subcommand(1);

  StitchArgs st;
  auto* stitch = app.add_subcommand("stitch", "Stitch a directory of frames into a map");
  stitch->add_option("--input", st.input, "Directory of .png/.pgm frames")->required();
  stitch->add_option("--out", st.out, "Output directory")->required();
  stitch->add_option("--config", st.config, "Run configuration JSON");
  stitch->add_option("--workers", st.workers, "Detection worker threads");
  stitch->add_option("--paced-ms", st.paced_ms, "Delay between ingested frames");
  stitch->add_option("--snapshot-every", st.snapshot_every, "Accepted frames per snapshot");
  stitch->add_flag("--sequential", st.sequential, "Run all stages on one thread");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic flight with ground truth");
  auto* src_opt = synth->add_option("--source", sy.source, "Large source image");
  synth->add_option("--procedural", sy.procedural, "Generate an NxN reference texture instead")
      ->excludes(src_opt);
  synth->add_option("--out", sy.out, "Output directory")->required();
  synth->add_option("--frames", sy.flight.frames, "Number of frames");
  synth->add_option("--width", sy.flight.width, "Frame width");
  synth->add_option("--height", sy.flight.height, "Frame height");
  synth->add_option("--overlap", sy.flight.overlap, "Overlap fraction between neighbours");
  synth->add_option("--max-rot", sy.flight.max_rot_deg, "Max rotation in degrees");
  synth->add_option("--persp", sy.flight.max_persp_jitter, "Max perspective jitter");
  synth->add_option("--brightness", sy.flight.brightness_jitter, "Brightness jitter fraction");
  synth->add_option("--noise", sy.flight.noise_sigma, "Gaussian noise sigma");
  synth->add_option("--seed", sy.flight.seed, "Generator seed");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a stitch run against ground truth");
  eval->add_option("--gt", ev.gt, "gt.json")->required();
  eval->add_option("--run", ev.run, "Stitch output directory")->required();

  BenchArgs bn;
  auto* bench = app.add_subcommand("bench", "Compare concurrent and sequential runs");
  bench->add_option("--gt", bn.gt, "gt.json")->required();
  bench->add_option("--config", bn.config, "Run configuration JSON");
  bench->add_option("--workers", bn.workers, "Worker threads for the concurrent run");
  bench->add_option("--out", bn.out, "Directory for bench.json (default: next to gt.json)");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitFatal;
  }

  try {
    if (*stitch) return cmd_stitch(st, out);
    if (*synth) return cmd_synth(sy, out);
    if (*eval) return cmd_eval(ev, out);
    if (*bench) return cmd_bench(bn, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFatal;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitFatal;
}

}  // namespace aeromap::cli
