#include <benchmark/benchmark.h>

#include <cstdint>
#include <optional>

#include "vroc/model.hpp"
#include "vroc/rng.hpp"

namespace {

using namespace vroc;

Clip random_clip(const ModelConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  Clip clip;
  for (int f = 0; f < cfg.frames; ++f) {
    Image img = Image::filled(cfg.image_size, cfg.image_size, 0, 0, 0);
    for (auto& b : img.rgb) b = static_cast<std::uint8_t>(rng.below(256));
    clip.push_back(img);
  }
  return clip;
}

void BM_grouped_mha(benchmark::State& state) {
  const ModelConfig cfg = ModelConfig::desk();
  const AttentionLayout layout = AttentionLayout::build(cfg);
  Rng rng(3);
  const int rows = cfg.tokens();
  Tensor x = Tensor::randn({rows, cfg.d_model}, rng, 1.0);
  Tensor w_qkv = Tensor::randn({cfg.d_model, 3 * cfg.d_model}, rng, 0.02);
  Tensor b_qkv = Tensor::zeros({3 * cfg.d_model});
  Tensor w_out = Tensor::randn({cfg.d_model, cfg.d_model}, rng, 0.02);
  Tensor b_out = Tensor::zeros({cfg.d_model});
  Tape tape(TapeOptions{.recording = false, .train_mode = false, .check_finite = false});
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        tape.grouped_mha(x, layout.time_groups, w_qkv, b_qkv, w_out, b_out, cfg.n_heads)
            .data()
            .data());
  }
}
BENCHMARK(BM_grouped_mha)->Unit(benchmark::kMillisecond);

void BM_forward_eval(benchmark::State& state) {
  const ModelConfig cfg = ModelConfig::desk();
  const AttentionLayout layout = AttentionLayout::build(cfg);
  ModelWeights w = ModelWeights::init(cfg, 1);
  const Clip clip = random_clip(cfg, 2);
  for (auto _ : state) {
    Tape tape(TapeOptions{.recording = false, .train_mode = false, .check_finite = false});
    benchmark::DoNotOptimize(
        forward_classify(tape, w, layout, clip, std::nullopt, 0).data().data());
  }
}
BENCHMARK(BM_forward_eval)->Unit(benchmark::kMillisecond);

void BM_forward_backward(benchmark::State& state) {
  const ModelConfig cfg = ModelConfig::desk();
  const AttentionLayout layout = AttentionLayout::build(cfg);
  ModelWeights w = ModelWeights::init(cfg, 1);
  w.set_requires_grad(true);
  const Clip clip = random_clip(cfg, 2);
  const int target[1] = {0};
  for (auto _ : state) {
    Tape tape(TapeOptions{.recording = true, .train_mode = true, .check_finite = false});
    Tensor logits = forward_classify(tape, w, layout, clip, std::nullopt, 7);
    Tensor row = tape.reshape(logits, {1, 2});
    Tensor loss = tape.cross_entropy_with_logits(row, target);
    tape.backward(loss);
    benchmark::DoNotOptimize(loss.item());
    for (auto& p : w.params()) p.tensor.zero_grad();
  }
}
BENCHMARK(BM_forward_backward)->Unit(benchmark::kMillisecond);

}  // namespace
