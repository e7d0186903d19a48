#include <benchmark/benchmark.h>

#include <random>

#include "qmlcp/estimate.hpp"
#include "qmlcp/simulate.hpp"

namespace {

using namespace qmlcp;

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::vector<double> path(const ModelFamily& family, std::vector<Vector> thetas, int n) {
  std::vector<double> tau;
  if (thetas.size() == 2) tau = {0.5};
  return simulate_piecewise(BreakModel{family, tau, std::move(thetas)}, n, 500, 7).x;
}

void BM_SegmentContrastGarch(benchmark::State& state) {
  const ModelFamily family(GarchFamily{1, 1});
  const int n = static_cast<int>(state.range(0));
  const ContrastEvaluator ev(family, path(family, {vec({0.4, 0.1, 0.8})}, n));
  const Vector theta = vec({0.3, 0.12, 0.75});
  Vector g;
  Matrix h;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ev.evaluate({0, n}, theta, &g, &h));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SegmentContrastGarch)->Arg(1000)->Arg(4000);

void BM_SegmentContrastTarch(benchmark::State& state) {
  const ModelFamily family(TarchFamily{2});
  const int n = static_cast<int>(state.range(0));
  const ContrastEvaluator ev(family, path(family, {vec({0.5, 0.2, 0.1, 0.3, 0.1})}, n));
  const Vector theta = vec({0.4, 0.25, 0.05, 0.25, 0.1});
  Vector g;
  Matrix h;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ev.evaluate({0, n}, theta, &g, &h));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SegmentContrastTarch)->Arg(1000);

void BM_CostTableAr(benchmark::State& state) {
  const ModelFamily family(ArFamily{1});
  const int n = static_cast<int>(state.range(0));
  const ContrastEvaluator ev(family, path(family, {vec({0.2}), vec({0.7})}, n));
  TableOptions options;
  options.workers = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_cost_table(ev, ParamDomain::default_for(family), 1, options));
  }
}
BENCHMARK(BM_CostTableAr)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_CostTableGarch(benchmark::State& state) {
  const ModelFamily family(GarchFamily{1, 1});
  const int n = 2000;
  const ContrastEvaluator ev(family, path(family, {vec({0.4, 0.1, 0.3}), vec({0.4, 0.1, 0.8})}, n));
  TableOptions options;
  options.min_len = 100;
  options.workers = 1;
  const int grid = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_cost_table(ev, ParamDomain::default_for(family), grid, options));
  }
}
BENCHMARK(BM_CostTableGarch)->Arg(200)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_DynamicProgram(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<int> positions(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) positions[static_cast<std::size_t>(i)] = i;
  SegmentCostTable table(positions, 1, 1, 1);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j <= m; ++j) table.set(i, j, u(rng) * (j - i), Vector::Zero(1), true);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(dp_segment(table, 5, 20.0));
  }
}
BENCHMARK(BM_DynamicProgram)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
