#include <benchmark/benchmark.h>

#include <random>

#include "aeromap/features.hpp"
#include "aeromap/geometry.hpp"
#include "aeromap/matching.hpp"
#include "aeromap/mosaic.hpp"
#include "aeromap/pipeline.hpp"
#include "aeromap/preprocess.hpp"
#include "aeromap/pyramid.hpp"
#include "aeromap/synthbench.hpp"

using namespace aeromap;

namespace {

const ImageGray& frame() {
  static const ImageGray img = [] {
    const ImageGray tex = make_reference_texture(700, 540, 3);
    ImageGray f(640, 480, 0);
    for (int y = 0; y < 480; ++y)
      for (int x = 0; x < 640; ++x) f(x, y) = tex(x + 30, y + 30);
    return f;
  }();
  return img;
}

std::vector<Descriptor256> random_descriptors(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Descriptor256> out(n);
  for (auto& d : out)
    for (auto& w : d.words) w = rng();
  return out;
}

}  // namespace

static void BM_Preprocess(benchmark::State& state) {
  const PreprocessConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(preprocess(frame(), cfg));
}
BENCHMARK(BM_Preprocess)->Unit(benchmark::kMillisecond);

static void BM_Pyramid(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(build_pyramid(frame(), 1.2, 8));
}
BENCHMARK(BM_Pyramid)->Unit(benchmark::kMillisecond);

static void BM_FastDetect(benchmark::State& state) {
  const ImageGray img = gaussian_blur(frame(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(fast_detect(img, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_FastDetect)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

static void BM_OrbExtract(benchmark::State& state) {
  const OrbExtractor orb;
  const Pyramid pyr = build_pyramid(preprocess(frame(), PreprocessConfig{}).enhanced, 1.2, 8);
  for (auto _ : state) benchmark::DoNotOptimize(orb.detect_and_describe(pyr));
}
BENCHMARK(BM_OrbExtract)->Unit(benchmark::kMillisecond);

static void BM_Hamming(benchmark::State& state) {
  const auto d = random_descriptors(2, 1);
  for (auto _ : state) benchmark::DoNotOptimize(hamming(d[0], d[1]));
}
BENCHMARK(BM_Hamming);

static void BM_IndexBuild(benchmark::State& state) {
  const auto d = random_descriptors(500, 2);
  for (auto _ : state) benchmark::DoNotOptimize(build_index(d, 8, 1));
}
BENCHMARK(BM_IndexBuild)->Unit(benchmark::kMicrosecond);

static void BM_IndexQuery(benchmark::State& state) {
  const auto d = random_descriptors(500, 3);
  const BinaryIndex idx = build_index(d, 8, 1);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(idx.knn2(d[i++ % d.size()]));
}
BENCHMARK(BM_IndexQuery);

static void BM_BruteForceQuery(benchmark::State& state) {
  const auto d = random_descriptors(500, 4);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_knn2(d[i++ % d.size()], d));
}
BENCHMARK(BM_BruteForceQuery);

static void BM_MatchFrames(benchmark::State& state) {
  const OrbExtractor orb;
  const FeatureSet a = orb.detect_and_describe(frame());
  MatchConfig cfg;
  cfg.exact = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(match_frames(a, a, cfg));
}
BENCHMARK(BM_MatchFrames)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_Ransac(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(0, 640), uy(0, 480);
  Mat3 h = Homography::rotation(0.05).matrix();
  h(0, 2) = 250;
  h(1, 2) = 12;
  const Homography truth(h);
  std::vector<Correspondence> pairs;
  const int n = static_cast<int>(state.range(0));
  for (int i = 0; i < n; ++i) {
    const Vec2 p(ux(rng), uy(rng));
    pairs.push_back({p, i % 10 < 6 ? truth.project(p) : Vec2(ux(rng), uy(rng))});
  }
  for (auto _ : state) {
    std::mt19937_64 gen(1);
    benchmark::DoNotOptimize(ransac_homography(pairs, RansacConfig{}, gen));
  }
}
BENCHMARK(BM_Ransac)->Arg(100)->Arg(300)->Unit(benchmark::kMicrosecond);

static void BM_Composite(benchmark::State& state) {
  Mat3 h = Homography::rotation(0.05).matrix();
  h(0, 2) = 256;
  const Homography pose(h);
  for (auto _ : state) {
    MosaicCanvas canvas;
    canvas.composite(frame(), Homography::identity());
    canvas.composite(frame(), pose);
    benchmark::DoNotOptimize(canvas.weight_at(300, 200));
  }
}
BENCHMARK(BM_Composite)->UseRealTime()->Unit(benchmark::kMillisecond);

static void BM_Pipeline(benchmark::State& state) {
  const ImageGray src = make_reference_texture(1400, 900, 7);
  FlightConfig f;
  f.frames = 6;
  f.width = 320;
  f.height = 240;
  const MemorySource source(generate_sequence(src, f).images());
  RunConfig cfg;
  cfg.imaging.target_width = 320;
  cfg.imaging.target_height = 240;
  cfg.pipeline.workers = static_cast<int>(state.range(0));
  const RunMode mode = state.range(0) == 0 ? RunMode::Sequential : RunMode::Concurrent;
  if (cfg.pipeline.workers == 0) cfg.pipeline.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(source, cfg, mode));
  state.SetItemsProcessed(state.iterations() * 6);
}
BENCHMARK(BM_Pipeline)->Arg(0)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
