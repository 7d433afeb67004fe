#include <benchmark/benchmark.h>

#include <random>

#include "softsensor/regress.hpp"

using namespace softsensor;

namespace {

void make_instance(Eigen::Index n, Eigen::Index p, Matrix& x, Vector& y) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(n * 17 + p));
  std::normal_distribution<double> g;
  x.resize(n, p);
  y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = g(rng);
    y[i] = x(i, 0) - 0.5 * x(i, p / 2) + 0.3 * g(rng);
  }
}

void BM_LassoFit(benchmark::State& state) {
  Matrix x;
  Vector y;
  make_instance(1000, state.range(0), x, y);
  LassoConfig cfg;
  cfg.lambda = 0.01 * lasso_lambda_max(x, y);
  for (auto _ : state) benchmark::DoNotOptimize(fit_lasso(x, y, cfg).coef.sum());
}
BENCHMARK(BM_LassoFit)->Arg(10)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_TuneLambda(benchmark::State& state) {
  Matrix x;
  Vector y;
  make_instance(800, 11, x, y);
  for (auto _ : state)
    benchmark::DoNotOptimize(tune_lambda(x, y, {Criterion::r2adj, Criterion::aicc, Criterion::bic}, 20, 1, 1).lambda);
}
BENCHMARK(BM_TuneLambda)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
