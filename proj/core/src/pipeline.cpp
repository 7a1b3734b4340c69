#include "aeromap/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <memory>
#include <mutex>
#include <thread>

#include "aeromap/concurrency.hpp"
#include "aeromap/error.hpp"
#include "aeromap/image_io.hpp"
#include "aeromap/log.hpp"
#include "aeromap/matching.hpp"
#include "aeromap/pyramid.hpp"

namespace aeromap {

DirectorySource::DirectorySource(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::FileNotFound, "input directory not found: " + dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png" || ext == ".pgm") files_.push_back(entry.path());
  }
  std::sort(files_.begin(), files_.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
}

ImageGray DirectorySource::load(std::size_t index) const { return load_image(files_[index]); }

std::string MemorySource::label(std::size_t index) const {
  return "memory:" + std::to_string(index);
}

ImageGray MemorySource::load(std::size_t index) const {
  if (frames_[index].empty()) {
    throw Error(ErrorCode::CorruptImage, "frame " + std::to_string(index) + " is unreadable");
  }
  return frames_[index];
}

bool accept_result(const std::optional<RansacResult>& r, const RansacConfig& cfg) {
  return r && r->inlier_count >= cfg.min_inliers && r->rms_error <= cfg.max_rms;
}

AlignmentDecision accept_or_reject(
    const std::optional<RansacResult>& vs_previous,
    const std::function<std::optional<RansacResult>()>& retry_keyframe,
    const RansacConfig& cfg) {
  if (accept_result(vs_previous, cfg)) return {true, false, vs_previous};
  if (retry_keyframe) {
    auto r = retry_keyframe();
    if (accept_result(r, cfg)) return {true, true, r};
    return {false, false, r ? r : vs_previous};
  }
  return {false, false, vs_previous};
}

bool snapshot_due(int accepted_count, int every) {
  return every >= 1 && accepted_count > 0 && accepted_count % every == 0;
}

namespace {

using Clock = std::chrono::steady_clock;

class RunClock {
 public:
  RunClock() : t0_(Clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0_).count();
  }

 private:
  Clock::time_point t0_;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Job {
  std::uint64_t seq = 0;
  FrameTicket ticket;
  ImageGray raw;
};

struct PreparedFrame {
  FrameTicket ticket;
  ImageGray working;
  std::shared_ptr<const IndexedFeatures> features;  // null when the frame failed
};

struct AlignedFrame {
  FrameTicket ticket;
  ImageGray working;
  FramePose pose;
  FrameMatches matches;
};

void reject(FrameTicket& t, std::string reason) {
  t.status = TicketStatus::Rejected;
  t.reason = std::move(reason);
}

// Stateless preprocess + detect stage; safe to call from many threads.
class FrameProcessor {
 public:
  explicit FrameProcessor(const RunConfig& cfg) : cfg_(cfg), orb_(cfg.features) {}

  PreparedFrame prepare(Job&& job, const RunClock& clock) const {
    PreparedFrame out;
    out.ticket = std::move(job.ticket);
    if (out.ticket.status == TicketStatus::Rejected) return out;
    try {
      PreparedImage img = preprocess(job.raw, cfg_.imaging);
      out.ticket.stamp(Stage::Preprocessed, clock.ms());
      const Pyramid pyr = build_pyramid(img.enhanced, cfg_.features.scale_factor,
                                        cfg_.features.n_levels);
      FeatureSet fs = orb_.detect_and_describe(pyr, out.ticket.frame_id);
      out.features = std::make_shared<const IndexedFeatures>(
          index_features(std::move(fs), cfg_.matching));
      out.working = std::move(img.working);
    } catch (const Error& e) {
      log::warn("frame " + std::to_string(out.ticket.frame_id) + " failed preprocessing: " + e.what());
      out.features.reset();
      reject(out.ticket, "preprocess");
    }
    out.ticket.stamp(Stage::Detected, clock.ms());
    return out;
  }

 private:
  const RunConfig& cfg_;
  OrbExtractor orb_;
};

// Sequential match/estimate stage: previous accepted frame with a single
// keyframe fallback.
class Aligner {
 public:
  explicit Aligner(const RunConfig& cfg) : cfg_(cfg) {}

  AlignedFrame align(PreparedFrame&& in, const RunClock& clock) {
    AlignedFrame out;
    out.ticket = std::move(in.ticket);
    out.working = std::move(in.working);
    out.pose.frame_id = out.ticket.frame_id;
    out.matches.frame_id = out.ticket.frame_id;
    FrameTicket& t = out.ticket;

    if (!in.features) {
      if (t.status != TicketStatus::Rejected) reject(t, "io");
    } else if (!prev_) {
      out.pose.accepted = true;
      t.status = TicketStatus::Accepted;
      t.reason = "anchor";
      prev_ = Reference{in.features, out.pose};
      key_ = prev_;
    } else {
      struct Attempt {
        std::int64_t target = -1;
        std::vector<Correspondence> pairs;
      };
      Attempt last;
      auto attempt = [&](const Reference& ref, std::uint64_t salt) -> std::optional<RansacResult> {
        last.target = ref.pose.frame_id;
        last.pairs.clear();
        const auto& cur = in.features->features.keypoints;
        const auto& tgt = ref.features->features.keypoints;
        for (const MatchPair& m : match_frames(*in.features, *ref.features, cfg_.matching)) {
          last.pairs.push_back({Vec2(cur[m.query_idx].x, cur[m.query_idx].y),
                                Vec2(tgt[m.train_idx].x, tgt[m.train_idx].y)});
        }
        t.matches = static_cast<int>(last.pairs.size());
        t.matched_against = ref.pose.frame_id;
        std::mt19937_64 rng(splitmix64(cfg_.ransac.seed ^ splitmix64(
                                           static_cast<std::uint64_t>(t.frame_id) * 2 + salt)));
        try {
          return ransac_homography(last.pairs, cfg_.ransac, rng);
        } catch (const Error&) {
          return std::nullopt;
        }
      };

      const Reference prev = *prev_;
      const auto first = attempt(prev, 0);
      std::function<std::optional<RansacResult>()> retry;
      if (key_ && key_->pose.frame_id != prev.pose.frame_id) {
        retry = [&] { return attempt(*key_, 1); };
      }
      const AlignmentDecision d = accept_or_reject(first, retry, cfg_.ransac);
      if (d.result) {
        t.inliers = d.result->inlier_count;
        t.rms = d.result->rms_error;
      }
      const Reference& target = d.via_keyframe ? *key_ : prev;
      out.matches.target_id = last.target;
      out.matches.pairs = std::move(last.pairs);
      if (d.accepted) {
        try {
          out.pose = chain_pose(target.pose, d.result->h, t.frame_id);
          t.status = TicketStatus::Accepted;
          t.reason = d.via_keyframe ? "keyframe" : "previous";
          t.matched_against = target.pose.frame_id;
          prev_ = Reference{in.features, out.pose};
          if (d.result->inlier_count >= cfg_.pipeline.keyframe_min_inliers) key_ = prev_;
        } catch (const Error&) {
          out.pose.accepted = false;
          reject(t, "alignment");
        }
      } else {
        reject(t, "alignment");
      }
    }
    t.stamp(Stage::Matched, clock.ms());
    return out;
  }

 private:
  struct Reference {
    std::shared_ptr<const IndexedFeatures> features;
    FramePose pose;
  };
  const RunConfig& cfg_;
  std::optional<Reference> prev_;
  std::optional<Reference> key_;
};

// Single-writer compositing stage plus snapshot policy.
class Compositor {
 public:
  Compositor(const RunConfig& cfg, PipelineResult& result) : cfg_(cfg), result_(result) {}

  void consume(AlignedFrame&& f, const RunClock& clock) {
    FrameTicket& t = f.ticket;
    if (f.pose.accepted) {
      try {
        result_.canvas.composite(f.working, f.pose.to_anchor);
        ++accepted_;
        last_accepted_ = t.frame_id;
        if (result_.working_width == 0) {
          result_.working_width = f.working.width();
          result_.working_height = f.working.height();
        }
        if (!cfg_.output.dir.empty() && snapshot_due(accepted_, cfg_.pipeline.snapshot_every)) {
          write(snapshot_stem(t.frame_id), t.frame_id, false);
        }
      } catch (const Error& e) {
        log::warn("frame " + std::to_string(t.frame_id) + " not composited: " + e.what());
        f.pose.accepted = false;
        reject(t, "composite");
      }
    }
    t.stamp(Stage::Composited, clock.ms());
    result_.poses.push_back(f.pose);
    if (!f.matches.pairs.empty() || f.matches.target_id >= 0) {
      result_.matches.push_back(std::move(f.matches));
    }
    result_.telemetry.per_frame.push_back(std::move(t));
  }

  void finish() {
    if (!cfg_.output.dir.empty()) write("map_final", last_accepted_, true);
  }

 private:
  void write(const std::string& stem, std::int64_t frame_id, bool coverage) {
    Snapshot snap = result_.canvas.render();
    snap.frame_id = frame_id;
    try {
      write_snapshot(cfg_.output.dir, stem, snap, coverage);
      result_.snapshots.push_back(std::filesystem::path(cfg_.output.dir) / (stem + ".png"));
    } catch (const Error& e) {
      result_.telemetry.io_errors.push_back(e.what());
      log::error(e.what());
    }
  }

  const RunConfig& cfg_;
  PipelineResult& result_;
  int accepted_ = 0;
  std::int64_t last_accepted_ = -1;
};

FrameTicket make_ticket(const FrameSource& source, std::size_t i) {
  FrameTicket t;
  t.frame_id = static_cast<std::int64_t>(i);
  t.path = source.label(i);
  return t;
}

Job load_job(const FrameSource& source, std::size_t i, const RunClock& clock,
             std::vector<std::string>& io_errors, std::mutex& mu) {
  Job job;
  job.ticket = make_ticket(source, i);
  try {
    job.raw = source.load(i);
  } catch (const std::exception& e) {
    reject(job.ticket, "io");
    std::lock_guard lock(mu);
    io_errors.push_back(e.what());
    log::warn(e.what());
  }
  job.ticket.stamp(Stage::Ingest, clock.ms());
  return job;
}

void pace(const RunConfig& cfg, std::size_t i) {
  if (i > 0 && cfg.pipeline.paced_delay_ms > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(cfg.pipeline.paced_delay_ms));
  }
}

void run_sequential(const FrameSource& source, const RunConfig& cfg, PipelineResult& result,
                    const RunClock& clock) {
  FrameProcessor processor(cfg);
  Aligner aligner(cfg);
  Compositor compositor(cfg, result);
  std::mutex mu;
  for (std::size_t i = 0; i < source.size(); ++i) {
    pace(cfg, i);
    Job job = load_job(source, i, clock, result.telemetry.io_errors, mu);
    compositor.consume(aligner.align(processor.prepare(std::move(job), clock), clock), clock);
  }
  compositor.finish();
}

void run_concurrent(const FrameSource& source, const RunConfig& cfg, PipelineResult& result,
                    const RunClock& clock) {
  const auto cap = static_cast<std::size_t>(cfg.pipeline.queue_cap);
  BoundedQueue<Job> ingest_q(cap);
  OrderedBuffer<PreparedFrame> detected_q(cap);
  BoundedQueue<AlignedFrame> composite_q(cap);
  ComputeBudget budget(cfg.pipeline.workers);

  FrameProcessor processor(cfg);
  Aligner aligner(cfg);
  Compositor compositor(cfg, result);

  std::mutex side_mu;
  std::vector<FrameTicket> dropped;
  std::vector<std::string> io_errors;

  std::thread reader([&] {
    std::uint64_t seq = 0;
    for (std::size_t i = 0; i < source.size(); ++i) {
      pace(cfg, i);
      Job job = load_job(source, i, clock, io_errors, side_mu);
      job.seq = seq;
      if (cfg.pipeline.drop_when_full) {
        FrameTicket copy = job.ticket;
        if (!ingest_q.try_push(std::move(job))) {
          reject(copy, "dropped");
          std::lock_guard lock(side_mu);
          dropped.push_back(std::move(copy));
          continue;
        }
      } else if (!ingest_q.push(std::move(job))) {
        break;
      }
      ++seq;
    }
    ingest_q.close();
  });

  std::atomic<int> active_workers{cfg.pipeline.workers};
  std::vector<std::thread> workers;
  for (int w = 0; w < cfg.pipeline.workers; ++w) {
    workers.emplace_back([&] {
      while (auto job = ingest_q.pop()) {
        const std::uint64_t seq = job->seq;
        PreparedFrame prepared;
        {
          ComputeBudget::Slot slot(budget, ComputeBudget::Priority::Low);
          prepared = processor.prepare(std::move(*job), clock);
        }
        detected_q.push(seq, std::move(prepared));
      }
      if (--active_workers == 0) detected_q.close();
    });
  }

  std::thread matcher([&] {
    while (auto prepared = detected_q.pop_next()) {
      AlignedFrame aligned;
      {
        ComputeBudget::Slot slot(budget, ComputeBudget::Priority::High);
        aligned = aligner.align(std::move(*prepared), clock);
      }
      composite_q.push(std::move(aligned));
    }
    composite_q.close();
  });

  while (auto aligned = composite_q.pop()) {
    ComputeBudget::Slot slot(budget, ComputeBudget::Priority::High);
    compositor.consume(std::move(*aligned), clock);
  }
  {
    ComputeBudget::Slot slot(budget, ComputeBudget::Priority::High);
    compositor.finish();
  }

  reader.join();
  for (auto& w : workers) w.join();
  matcher.join();

  auto& tel = result.telemetry;
  tel.max_queue_occupancy =
      std::max({ingest_q.high_water(), detected_q.high_water(), composite_q.high_water()});
  tel.io_errors.insert(tel.io_errors.end(), io_errors.begin(), io_errors.end());
  for (FrameTicket& t : dropped) {
    FramePose p;
    p.frame_id = t.frame_id;
    result.poses.push_back(p);
    tel.per_frame.push_back(std::move(t));
  }
  std::sort(result.poses.begin(), result.poses.end(),
            [](const FramePose& a, const FramePose& b) { return a.frame_id < b.frame_id; });
}

}  // namespace

PipelineResult run_pipeline(const FrameSource& source, const RunConfig& cfg, RunMode mode) {
  validate(cfg);
  PipelineResult result;
  const RunClock clock;
  if (mode == RunMode::Sequential) {
    run_sequential(source, cfg, result, clock);
  } else {
    run_concurrent(source, cfg, result, clock);
  }
  result.telemetry.elapsed_s = clock.ms() / 1000.0;
  finalize_telemetry(result.telemetry);
  if (result.working_width == 0) {
    result.working_width = cfg.imaging.target_width;
    result.working_height = cfg.imaging.target_height;
  }
  return result;
}

}  // namespace aeromap
