#include <benchmark/benchmark.h>

#include "vroc/rng.hpp"
#include "vroc/tensor.hpp"

namespace {

void BM_matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  vroc::Rng rng(1);
  vroc::Tensor a = vroc::Tensor::randn({n, n}, rng, 1.0);
  vroc::Tensor b = vroc::Tensor::randn({n, n}, rng, 1.0);
  vroc::Tape tape(vroc::TapeOptions{.recording = false, .train_mode = false,
                                    .check_finite = false});
  for (auto _ : state) {
    benchmark::DoNotOptimize(tape.matmul(a, b).data().data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}
BENCHMARK(BM_matmul)->Arg(64)->Arg(128)->Arg(256);

}  // namespace
