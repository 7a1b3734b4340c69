#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include <Eigen/LU>
#include <json.hpp>

#include "aeromap/error.hpp"
#include "aeromap/image_io.hpp"
#include "aeromap/synthbench.hpp"

namespace aeromap {

using nlohmann::json;

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  return x ^ (x >> 33);
}

double lattice(std::uint64_t seed, int octave, int ix, int iy) {
  std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(octave + 1));
  h = mix64(h ^ static_cast<std::uint32_t>(ix));
  h = mix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(iy)) << 32));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, int octave, double period, double x, double y) {
  const double fx = x / period;
  const double fy = y / period;
  const int ix = static_cast<int>(std::floor(fx));
  const int iy = static_cast<int>(std::floor(fy));
  const double tx = smooth(fx - ix);
  const double ty = smooth(fy - iy);
  const double a = lattice(seed, octave, ix, iy);
  const double b = lattice(seed, octave, ix + 1, iy);
  const double c = lattice(seed, octave, ix, iy + 1);
  const double d = lattice(seed, octave, ix + 1, iy + 1);
  return (a + (b - a) * tx) * (1 - ty) + (c + (d - c) * tx) * ty;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

double gaussian(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Mat3 translation(double tx, double ty) {
  Mat3 m = Mat3::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return m;
}

json params_json(const FlightConfig& c) {
  return {{"frames", c.frames},
          {"width", c.width},
          {"height", c.height},
          {"overlap", c.overlap},
          {"maxRotDeg", c.max_rot_deg},
          {"maxPerspJitter", c.max_persp_jitter},
          {"brightnessJitter", c.brightness_jitter},
          {"noiseSigma", c.noise_sigma},
          {"seed", c.seed}};
}

FlightConfig params_from_json(const json& j) {
  FlightConfig c;
  c.frames = j.at("frames").get<int>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.overlap = j.at("overlap").get<double>();
  c.max_rot_deg = j.at("maxRotDeg").get<double>();
  c.max_persp_jitter = j.value("maxPerspJitter", 0.0);
  c.brightness_jitter = j.at("brightnessJitter").get<double>();
  c.noise_sigma = j.at("noiseSigma").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

Homography homography_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 9) throw Error(ErrorCode::InvalidConfig, "homography needs 9 numbers");
  return Homography::from_row_major(v);
}

void validate_flight(const FlightConfig& c) {
  if (c.frames < 1 || c.width < 16 || c.height < 16 || !(c.overlap > 0.0 && c.overlap < 1.0) ||
      c.max_rot_deg < 0.0 || c.max_rot_deg >= 45.0 || c.max_persp_jitter < 0.0 ||
      c.brightness_jitter < 0.0 || c.brightness_jitter >= 1.0 || c.noise_sigma < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "invalid flight configuration");
  }
}

}  // namespace

ImageGray make_reference_texture(int width, int height, std::uint64_t seed) {
  if (width < 1 || height < 1) throw Error(ErrorCode::InvalidDimensions, "texture size");
  constexpr int kCell = 40;
  constexpr double kPeriods[] = {32.0, 16.0, 8.0, 4.0, 2.0, 1.0};
  constexpr double kAmps[] = {1.0, 0.9, 0.81, 0.729, 0.6561, 0.59049};
  double amp_sum = 0.0;
  for (double a : kAmps) amp_sum += a;
  ImageGray out(width, height, 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double checker = ((x / kCell + y / kCell) % 2 == 0) ? 1.0 : -1.0;
      double n = 0.0;
      for (int o = 0; o < 6; ++o) n += kAmps[o] * value_noise(seed, o, kPeriods[o], x, y);
      n = 2.0 * n / amp_sum - 1.0;
      const double g = static_cast<double>(x + y) / (width + height) * 2.0 - 1.0;
      out(x, y) = saturate_u8(128.0 + 100.0 * (0.1 * checker + 0.8 * n + 0.15 * g));
    }
  }
  return out;
}

int path_stride(int window, double overlap) {
  return static_cast<int>(std::lround((1.0 - overlap) * window));
}

GroundTruthSequence generate_sequence(const ImageGray& source, const FlightConfig& cfg) {
  validate_flight(cfg);
  const int sx = std::max(1, path_stride(cfg.width, cfg.overlap));
  const int sy = std::max(1, path_stride(cfg.height, cfg.overlap));

  // Margin large enough to keep a rotated and jittered window in-bounds.
  const double th = cfg.max_rot_deg * std::numbers::pi / 180.0;
  const double hw = cfg.width / 2.0;
  const double hh = cfg.height / 2.0;
  const double ex = hw * std::cos(th) + hh * std::sin(th) - hw;
  const double ey = hw * std::sin(th) + hh * std::cos(th) - hh;
  const double persp = cfg.max_persp_jitter * (hw + hh);
  const double grow = persp < 0.5 ? 1.0 / (1.0 - persp) : 2.0;
  const int margin = static_cast<int>(std::ceil(std::max(ex, ey) + (grow - 1.0) * (hw + hh))) + 2;

  const int span_x = source.width() - 2 * margin - cfg.width;
  const int cols = span_x < 0 ? 0 : span_x / sx + 1;
  if (cols < 1) throw Error(ErrorCode::SourceTooSmall, "source too small for the flight window");
  const int rows = (cfg.frames + cols - 1) / cols;
  if (2 * margin + cfg.height + (rows - 1) * sy > source.height()) {
    throw Error(ErrorCode::SourceTooSmall, "source too small for the flight path");
  }

  std::mt19937_64 rng(cfg.seed);
  GroundTruthSequence seq;
  seq.params = cfg;
  const Mat3 to_center = translation(-(cfg.width - 1) / 2.0, -(cfg.height - 1) / 2.0);
  std::optional<Homography> g0_inv;

  for (int k = 0; k < cfg.frames; ++k) {
    const int row = k / cols;
    const int col = (row % 2 == 0) ? k % cols : cols - 1 - k % cols;
    const double left = margin + col * sx;
    const double top = margin + row * sy;

    const double theta = uniform(rng, -th, th);
    const double p1 = uniform(rng, -cfg.max_persp_jitter, cfg.max_persp_jitter);
    const double p2 = uniform(rng, -cfg.max_persp_jitter, cfg.max_persp_jitter);
    const double gain = uniform(rng, 1.0 - cfg.brightness_jitter, 1.0 + cfg.brightness_jitter);

    Mat3 r = Mat3::Identity();
    if (theta != 0.0) {
      r(0, 0) = std::cos(theta);
      r(0, 1) = -std::sin(theta);
      r(1, 0) = std::sin(theta);
      r(1, 1) = std::cos(theta);
    }
    Mat3 p = Mat3::Identity();
    p(2, 0) = p1;
    p(2, 1) = p2;
    const Mat3 g = translation(left + (cfg.width - 1) / 2.0, top + (cfg.height - 1) / 2.0) * r * p *
                   to_center;
    const Homography gk(g);

    const std::array<Vec2, 4> corners = {Vec2(0, 0), Vec2(cfg.width - 1, 0),
                                         Vec2(0, cfg.height - 1),
                                         Vec2(cfg.width - 1, cfg.height - 1)};
    for (const Vec2& c : corners) {
      const Vec2 s = gk.project(c);
      if (s.x() < 0 || s.y() < 0 || s.x() > source.width() - 1 || s.y() > source.height() - 1) {
        throw Error(ErrorCode::SourceTooSmall, "flight window leaves the source image");
      }
    }

    ImageGray frame(cfg.width, cfg.height, 0);
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        const Vec2 s = gk.project(Vec2(x, y));
        double v = sample_bilinear(source, s.x(), s.y()) * gain;
        if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * gaussian(rng);
        frame(x, y) = saturate_u8(v);
      }
    }

    if (!g0_inv) g0_inv = gk.inverse();
    GroundTruthFrame f;
    f.frame_id = k;
    f.to_source = gk;
    f.to_anchor = k == 0 ? Homography::identity() : compose(*g0_inv, gk);
    f.image = std::move(frame);
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

Homography GroundTruthSequence::pairwise(std::size_t a, std::size_t b) const {
  return compose(frames.at(b).to_anchor.inverse(), frames.at(a).to_anchor);
}

std::vector<ImageGray> GroundTruthSequence::images() const {
  std::vector<ImageGray> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.image);
  return out;
}

std::string ground_truth_to_json(const GroundTruthSequence& seq) {
  json frames = json::array();
  for (const auto& f : seq.frames) {
    frames.push_back({{"frameId", f.frame_id}, {"path", f.path}, {"gtToAnchor", f.to_anchor.row_major()}});
  }
  const Homography anchor =
      seq.frames.empty() ? Homography::identity() : seq.frames.front().to_source;
  const json j = {{"sourcePath", seq.source_path},
                  {"params", params_json(seq.params)},
                  {"anchorToSource", anchor.row_major()},
                  {"frames", frames}};
  return j.dump(2);
}

void save_sequence(const std::filesystem::path& dir, GroundTruthSequence& seq,
                   const std::string& source_path) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  seq.source_path = source_path;
  for (auto& f : seq.frames) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04lld.png", static_cast<long long>(f.frame_id));
    f.path = name;
    save_image(dir / name, f.image);
  }
  std::ofstream out(dir / "gt.json", std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / "gt.json").string());
  out << ground_truth_to_json(seq) << '\n';
}

GroundTruthSequence load_ground_truth(const std::filesystem::path& gt_file, bool load_images) {
  std::ifstream in(gt_file, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "ground truth not found: " + gt_file.string());
  GroundTruthSequence seq;
  try {
    const json j = json::parse(in);
    seq.source_path = j.at("sourcePath").get<std::string>();
    seq.params = params_from_json(j.at("params"));
    const Homography anchor = j.contains("anchorToSource")
                                  ? homography_from_json(j.at("anchorToSource"))
                                  : Homography::identity();
    for (const json& fj : j.at("frames")) {
      GroundTruthFrame f;
      f.frame_id = fj.at("frameId").get<std::int64_t>();
      f.path = fj.at("path").get<std::string>();
      f.to_anchor = homography_from_json(fj.at("gtToAnchor"));
      f.to_source = compose(anchor, f.to_anchor);
      seq.frames.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "malformed ground truth: " + std::string(e.what()));
  }
  if (load_images) {
    for (auto& f : seq.frames) {
      std::filesystem::path p(f.path);
      if (p.is_relative()) p = gt_file.parent_path() / p;
      f.image = load_image(p);
    }
  }
  return seq;
}

Mat3 resize_mapping(int from_w, int from_h, int to_w, int to_h) {
  const double sx = static_cast<double>(to_w) / from_w;
  const double sy = static_cast<double>(to_h) / from_h;
  Mat3 s = Mat3::Identity();
  s(0, 0) = sx;
  s(1, 1) = sy;
  s(0, 2) = 0.5 * sx - 0.5;
  s(1, 2) = 0.5 * sy - 0.5;
  return s;
}

Homography to_working(const Homography& h, int frame_w, int frame_h, int work_w, int work_h) {
  if (frame_w == work_w && frame_h == work_h) return h;
  const Mat3 s = resize_mapping(frame_w, frame_h, work_w, work_h);
  return Homography(s * h.matrix() * s.inverse());
}

}  // namespace aeromap
