#include <benchmark/benchmark.h>

#include <random>

#include "softsensor/subset.hpp"

using namespace softsensor;

namespace {

void make_instance(std::size_t n, std::size_t p, Matrix& x, Vector& y) {
  std::mt19937_64 rng(n * 131 + p);
  std::normal_distribution<double> g;
  x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  y.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double common = g(rng);
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = 0.4 * common + g(rng);
    y[i] = 0.5 * g(rng);
    for (Eigen::Index j = 0; j < x.cols(); j += 2) y[i] += x(i, j);
  }
}

void BM_BestSubsetBic(benchmark::State& state) {
  Matrix x;
  Vector y;
  make_instance(400, static_cast<std::size_t>(state.range(0)), x, y);
  std::size_t nodes = 0;
  for (auto _ : state) {
    auto r = best_subset(x, y, Criterion::bic);
    nodes = r.log.nodes;
    benchmark::DoNotOptimize(r.support);
  }
  state.counters["nodes"] = static_cast<double>(nodes);
}
BENCHMARK(BM_BestSubsetBic)->DenseRange(6, 16, 2)->Unit(benchmark::kMillisecond);

void BM_SsCvSolve(benchmark::State& state) {
  Matrix x;
  Vector y;
  const auto p = static_cast<std::size_t>(state.range(0));
  make_instance(400, p, x, y);
  const auto plan = make_folds(400, 3, p, 1);
  for (auto _ : state) benchmark::DoNotOptimize(ss_cv_solve(x, y, plan).support);
}
BENCHMARK(BM_SsCvSolve)->DenseRange(6, 12, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
