#include <benchmark/benchmark.h>

#include "robrank/hodge.hpp"
#include "robrank/lasso.hpp"
#include "robrank/lbi.hpp"
#include "robrank/simbench.hpp"

using namespace robrank;

namespace {

struct Problem {
  SyntheticInstance inst;
  DesignOperator op;
  Vector y;

  explicit Problem(SyntheticInstance i) : inst(std::move(i)), op(build_design(inst.dataset)), y(response(op, inst.dataset)) {}
};

Problem flip_problem(benchmark::State& state) {
  return Problem(gen_flip(static_cast<Index>(state.range(0)), static_cast<Index>(state.range(1)), 0.05, 1));
}

}  // namespace

static void BM_SolveL2(benchmark::State& state) {
  const auto p = flip_problem(state);
  for (auto _ : state) benchmark::DoNotOptimize(solve_l2(p.op, p.y));
}
BENCHMARK(BM_SolveL2)->Args({16, 1000})->Args({200, 20000})->Args({1000, 100000})->Unit(benchmark::kMillisecond);

static void BM_ProjectionApply(benchmark::State& state) {
  const auto p = flip_problem(state);
  const CyclicProjection proj(p.op);
  for (auto _ : state) benchmark::DoNotOptimize(proj.apply(p.y));
}
BENCHMARK(BM_ProjectionApply)->Args({16, 1000})->Args({200, 20000})->Args({1000, 100000})->Unit(benchmark::kMicrosecond);

static void BM_SolveLasso(benchmark::State& state) {
  const auto p = flip_problem(state);
  const CyclicProjection proj(p.op);
  for (auto _ : state) benchmark::DoNotOptimize(solve_lasso(proj, p.y, 1.0));
}
BENCHMARK(BM_SolveLasso)->Args({16, 1000})->Args({200, 20000})->Unit(benchmark::kMillisecond);

static void BM_LassoPath(benchmark::State& state) {
  const auto p = flip_problem(state);
  const CyclicProjection proj(p.op);
  for (auto _ : state) benchmark::DoNotOptimize(lasso_path(proj, p.y));
}
BENCHMARK(BM_LassoPath)->Args({16, 1000})->Unit(benchmark::kMillisecond);

static void BM_LbiPath(benchmark::State& state) {
  const auto p = flip_problem(state);
  const CyclicProjection proj(p.op);
  LbiConfig cfg;
  cfg.time_horizon = 200.0 / lambda_max(proj, p.y);
  cfg.max_iters = 1000000;
  cfg.refit = FinalRefit::none;
  for (auto _ : state) benchmark::DoNotOptimize(lbi_run(proj, p.y, cfg));
}
BENCHMARK(BM_LbiPath)->Args({16, 1000})->Args({200, 20000})->Unit(benchmark::kMillisecond);

static void BM_CvLambda(benchmark::State& state) {
  const auto p = flip_problem(state);
  const CyclicProjection proj(p.op);
  for (auto _ : state) benchmark::DoNotOptimize(cv_lambda(proj, p.y, 5, std::nullopt, 1));
}
BENCHMARK(BM_CvLambda)->Args({16, 1000})->Unit(benchmark::kMillisecond);
