#include <random>

#include <benchmark/benchmark.h>

#include "egovos/config.hpp"
#include "egovos/memory.hpp"
#include "egovos/metrics.hpp"
#include "egovos/ops.hpp"
#include "egovos/segmenter.hpp"
#include "egovos/synth.hpp"

using namespace egovos;

namespace {

Tensor uniform(std::vector<int> shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& v : t.values()) v = u(rng);
  return t;
}

void BM_Conv2d(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  Var x(uniform({c, 32, 32}, rng)), w(uniform({c, c, 3, 3}, rng)), b(uniform({c}, rng));
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, w, b, 1, 1).value().data());
}
BENCHMARK(BM_Conv2d)->Arg(16)->Arg(32)->Arg(64);

void BM_MemoryRead(benchmark::State& state) {
  const int entries = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  MemoryBank bank(entries - 1);
  for (int t = 0; t < entries; ++t) {
    MemoryEntry e{Var(uniform({32, 4, 4}, rng)), Var(uniform({2, 64, 4, 4}, rng)), t};
    if (t == 0) bank.set_permanent(e);
    else bank.write(e);
  }
  Var q(uniform({32, 4, 4}, rng));
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(memory_read(q, bank, {}).value().data());
}
BENCHMARK(BM_MemoryRead)->Arg(1)->Arg(4)->Arg(8);

void BM_SegmentFrame(benchmark::State& state) {
  RunConfig cfg = RunConfig::bench();
  cfg.model.fusion_enabled = state.range(0) != 0;
  SynthConfig sc = cfg.synth;
  sc.frames = 2;
  SequenceData seq = to_sequence_data(render_clip(sc), "bench");
  Model model(cfg.model, 1);
  MemoryBank bank = init_from_first_frame(model, seq.frames[0], seq.depth(0), seq.padded_mask(0), 0);
  for (auto _ : state) {
    MemoryBank b = bank;
    benchmark::DoNotOptimize(segment_frame(model, seq.frames[1], seq.depth(1), 1, b, 5).mask);
  }
}
BENCHMARK(BM_SegmentFrame)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BoundaryF(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  MaskMap a(n, n, 1), b(n, n, 1);
  for (int y = n / 4; y < 3 * n / 4; ++y)
    for (int x = n / 4; x < 3 * n / 4; ++x) {
      a.set(y, x, 1);
      b.set(y, x + 1, 1);
    }
  for (auto _ : state) benchmark::DoNotOptimize(boundary_f(a, b, 1));
}
BENCHMARK(BM_BoundaryF)->Arg(64)->Arg(480);

}  // namespace
BENCHMARK_MAIN();
