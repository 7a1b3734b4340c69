#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/LU>
#include <json.hpp>

#include "aeromap/error.hpp"
#include "aeromap/features.hpp"
#include "aeromap/matching.hpp"
#include "aeromap/preprocess.hpp"
#include "aeromap/pyramid.hpp"
#include "aeromap/synthbench.hpp"

namespace aeromap {

using nlohmann::json;

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double pair_precision(const Homography& gt, const std::vector<Correspondence>& pairs,
                      double epsilon) {
  int correct = 0;
  for (const Correspondence& c : pairs) {
    try {
      if ((gt.project(c.src) - c.dst).norm() <= epsilon) ++correct;
    } catch (const Error&) {
    }
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

void add_pair(MatchingEval& out, const Homography& gt, const std::vector<Correspondence>& pairs,
              std::int64_t frame_id, double epsilon) {
  if (pairs.empty()) {
    out.per_pair.push_back(0.0);
    out.flagged.push_back(frame_id);
  } else {
    out.per_pair.push_back(pair_precision(gt, pairs, epsilon));
  }
}

Homography gt_working(const GroundTruthSequence& seq, const Homography& h, int work_w, int work_h) {
  return to_working(h, seq.params.width, seq.params.height, work_w, work_h);
}

}  // namespace

MatchingEval eval_matching(const GroundTruthSequence& seq, const RunConfig& cfg, double epsilon) {
  MatchingEval out;
  const OrbExtractor orb(cfg.features);
  std::vector<IndexedFeatures> feats;
  int work_w = 0;
  int work_h = 0;
  for (const GroundTruthFrame& f : seq.frames) {
    if (f.image.empty()) throw Error(ErrorCode::FileNotFound, "frame image not loaded: " + f.path);
    const PreparedImage img = preprocess(f.image, cfg.imaging);
    work_w = img.enhanced.width();
    work_h = img.enhanced.height();
    const Pyramid pyr =
        build_pyramid(img.enhanced, cfg.features.scale_factor, cfg.features.n_levels);
    feats.push_back(index_features(orb.detect_and_describe(pyr, f.frame_id), cfg.matching));
  }
  for (std::size_t k = 1; k < feats.size(); ++k) {
    const auto& q = feats[k].features.keypoints;
    const auto& t = feats[k - 1].features.keypoints;
    std::vector<Correspondence> pairs;
    for (const MatchPair& m : match_frames(feats[k], feats[k - 1], cfg.matching)) {
      pairs.push_back({Vec2(q[m.query_idx].x, q[m.query_idx].y),
                       Vec2(t[m.train_idx].x, t[m.train_idx].y)});
    }
    add_pair(out, gt_working(seq, seq.pairwise(k, k - 1), work_w, work_h), pairs,
             seq.frames[k].frame_id, epsilon);
  }
  out.precision = mean_of(out.per_pair);
  return out;
}

MatchingEval eval_run_matches(const GroundTruthSequence& seq, const PipelineResult& run,
                              double epsilon) {
  MatchingEval out;
  for (const FrameMatches& fm : run.matches) {
    if (fm.target_id < 0) continue;
    const auto a = static_cast<std::size_t>(fm.frame_id);
    const auto b = static_cast<std::size_t>(fm.target_id);
    if (a >= seq.frames.size() || b >= seq.frames.size()) {
      throw Error(ErrorCode::InvalidConfig, "match record outside the ground truth");
    }
    add_pair(out, gt_working(seq, seq.pairwise(a, b), run.working_width, run.working_height),
             fm.pairs, fm.frame_id, epsilon);
  }
  out.precision = mean_of(out.per_pair);
  return out;
}

AlignmentEval eval_alignment(const GroundTruthSequence& seq, std::span<const FramePose> poses,
                             int work_w, int work_h) {
  if (poses.size() != seq.frames.size()) {
    throw Error(ErrorCode::InvalidConfig,
                "frame count mismatch: " + std::to_string(poses.size()) + " poses vs " +
                    std::to_string(seq.frames.size()) + " ground-truth frames");
  }
  AlignmentEval out;
  std::optional<std::size_t> anchor;
  std::optional<std::size_t> prev;
  for (std::size_t k = 0; k < poses.size(); ++k) {
    if (!poses[k].accepted) {
      ++out.excluded;
      continue;
    }
    if (!anchor) anchor = k;
    const Homography gt_chain = gt_working(seq, seq.pairwise(k, *anchor), work_w, work_h);
    out.chain.push_back(corner_transfer_rms(poses[k].to_anchor, gt_chain, work_w, work_h));
    if (prev) {
      const Homography est = compose(poses[*prev].to_anchor.inverse(), poses[k].to_anchor);
      const Homography gt = gt_working(seq, seq.pairwise(k, *prev), work_w, work_h);
      out.pairwise.push_back(corner_transfer_rms(est, gt, work_w, work_h));
    }
    prev = k;
  }
  out.pairwise_mean = mean_of(out.pairwise);
  out.chain_mean = mean_of(out.chain);
  out.chain_max = out.chain.empty() ? 0.0 : *std::max_element(out.chain.begin(), out.chain.end());
  return out;
}

double eval_mosaic(const GroundTruthSequence& seq, const ImageGray& source,
                   const Snapshot& snapshot, std::int64_t anchor_id, int work_w, int work_h) {
  if (anchor_id < 0 || static_cast<std::size_t>(anchor_id) >= seq.frames.size()) {
    throw Error(ErrorCode::EmptyOverlap, "no anchor frame for the mosaic");
  }
  // Canvas (anchor working coords) -> source pixels.
  const Mat3 s = resize_mapping(seq.params.width, seq.params.height, work_w, work_h);
  const Homography world_to_source(seq.frames[anchor_id].to_source.matrix() * s.inverse());

  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < snapshot.image.height(); ++y) {
    for (int x = 0; x < snapshot.image.width(); ++x) {
      if (snapshot.coverage(x, y) == 0) continue;
      Vec2 p;
      try {
        p = world_to_source.project(Vec2(snapshot.origin_x + x, snapshot.origin_y + y));
      } catch (const Error&) {
        continue;
      }
      if (p.x() < 0 || p.y() < 0 || p.x() > source.width() - 1 || p.y() > source.height() - 1) {
        continue;
      }
      sum += std::abs(snapshot.image(x, y) - sample_bilinear(source, p.x(), p.y()));
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::EmptyOverlap, "mosaic and source do not overlap");
  return sum / static_cast<double>(n);
}

TimingSummary timing_summary(const Telemetry& t) {
  return {t.fps, t.latency_mean_ms, t.latency_p95_ms, t.accepted, t.rejected};
}

std::string eval_report_to_json(const EvalReport& r) {
  json j;
  j["matchPrecision"] = r.matching.precision;
  j["matchPrecisionPerPair"] = r.matching.per_pair;
  j["flaggedFrames"] = r.matching.flagged;
  j["pairwiseCornerErrPx"] = {{"mean", r.alignment.pairwise_mean},
                              {"perPair", r.alignment.pairwise}};
  j["chainCornerErrPx"] = {{"mean", r.alignment.chain_mean},
                           {"max", r.alignment.chain_max},
                           {"perFrame", r.alignment.chain}};
  j["excludedFrames"] = r.alignment.excluded;
  j["mosaicMAD"] = r.mosaic_mad ? json(*r.mosaic_mad) : json(nullptr);
  if (r.timing) {
    j["timing"] = {{"fps", r.timing->fps},
                   {"latencyMeanMs", r.timing->latency_mean_ms},
                   {"latencyP95Ms", r.timing->latency_p95_ms},
                   {"accepted", r.timing->accepted},
                   {"rejected", r.timing->rejected}};
  } else {
    j["timing"] = nullptr;
  }
  j["headline"] = {{"matchPrecision", r.matching.precision},
                   {"stitchingErrorPx", r.alignment.pairwise_mean},
                   {"fps", r.timing ? json(r.timing->fps) : json(nullptr)},
                   {"latencyMs", r.timing ? json(r.timing->latency_mean_ms) : json(nullptr)}};
  return j.dump(2);
}

}  // namespace aeromap
