#include <benchmark/benchmark.h>

#include <random>

#include "softsensor/pretreat.hpp"

using namespace softsensor;

namespace {

Matrix contaminated(Eigen::Index n, Eigen::Index p) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  Matrix m(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = g(rng) + (i < n / 10 ? 8.0 : 0.0);
  return m;
}

void BM_McdFit(benchmark::State& state) {
  const Matrix data = contaminated(state.range(0), 5);
  McdConfig cfg;
  cfg.restarts = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(mcd_fit(data, cfg).subset.size());
}
BENCHMARK(BM_McdFit)->Args({1000, 20})->Args({5000, 20})->Args({5000, 100})->Unit(benchmark::kMillisecond);

void BM_KMeansFit(benchmark::State& state) {
  const Matrix data = contaminated(state.range(0), 5);
  KMeansOptions o;
  o.restarts = 20;
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_fit(data, 3, o).inertia);
}
BENCHMARK(BM_KMeansFit)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
