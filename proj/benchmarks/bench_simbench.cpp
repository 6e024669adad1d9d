#include <benchmark/benchmark.h>

#include "robrank/simbench.hpp"

using namespace robrank;

static void BM_GridCell(benchmark::State& state) {
  GridConfig cfg;
  cfg.method = state.range(0) ? GridMethod::lbi : GridMethod::lasso;
  cfg.repeats = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_grid(cfg));
}
BENCHMARK(BM_GridCell)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_GenImage(benchmark::State& state) {
  const auto side = static_cast<Index>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(gen_image(side, side, 2, 0.05, 0.1, 0.5, std::nullopt, 1));
}
BENCHMARK(BM_GenImage)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_RocAuc(benchmark::State& state) {
  const auto inst = gen_flip(16, static_cast<Index>(state.range(0)), 0.05, 1);
  const Vector scores = inst.truth_gamma.cwiseAbs();
  for (auto _ : state) benchmark::DoNotOptimize(roc_auc(scores, inst.truth_outliers));
}
BENCHMARK(BM_RocAuc)->Arg(1000)->Arg(100000)->Unit(benchmark::kMicrosecond);
