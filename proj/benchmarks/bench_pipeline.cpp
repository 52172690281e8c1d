#include <benchmark/benchmark.h>

#include "vroc/sim.hpp"
#include "vroc/vision.hpp"

namespace {

using namespace vroc;

void BM_simulate_round(benchmark::State& state) {
  const SimConfig cfg;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_round(cfg, seed++).frames.size());
  }
}
BENCHMARK(BM_simulate_round)->Unit(benchmark::kMillisecond);

void BM_render_frame(benchmark::State& state) {
  const SimConfig cfg;
  const GroundTruth gt = simulate_round(cfg, 5);
  const FrameState& mid = gt.frames[gt.frames.size() / 2];
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_frame(mid, cfg.map, cfg.roster).rgb.data());
  }
}
BENCHMARK(BM_render_frame)->Unit(benchmark::kMillisecond);

void BM_extract_frame(benchmark::State& state) {
  const SimConfig cfg;
  const GroundTruth gt = simulate_round(cfg, 5);
  const Image frame = render_frame(gt.frames[gt.frames.size() / 2], cfg.map, cfg.roster);
  const VisionTemplates tmpl = VisionTemplates::build();
  const VisionConfig vcfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_frame(frame, cfg.map, tmpl, vcfg).agents.size());
  }
}
BENCHMARK(BM_extract_frame)->Unit(benchmark::kMillisecond);

}  // namespace
