#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "softsensor/dataset.hpp"
#include "softsensor/eval.hpp"
#include "softsensor/pretreat.hpp"
#include "softsensor/regress.hpp"
#include "softsensor/subset.hpp"

namespace softsensor {

// Outlier treatment ------------------------------------------------------

struct TreatmentConfig {
  DetectorKind method = DetectorKind::mcd;
  double confidence = 0.997;
  std::optional<std::size_t> h;
  std::size_t restarts = 100;
  CutoffFamily cutoff = CutoffFamily::f_approximation;
  std::size_t k = 0;  ///< 0 selects k by the elbow method
  std::size_t k_max = 8;
  double min_cluster_fraction = 0.02;
};

/// Runs the configured detector on the standardized inputs of every row.
OutlierReport detect_outliers(const Dataset& data, const TreatmentConfig& cfg, std::uint64_t seed,
                              unsigned threads = 1);

// Design methods -----------------------------------------------------------

enum class MethodKind { ols, pca, pls, lasso, ss, sscv, fixed };

struct MethodSpec {
  MethodKind kind = MethodKind::ols;
  std::string label = "ols";
  LatentOptions latent;
  std::vector<Criterion> lasso_criteria{Criterion::r2adj, Criterion::aicc, Criterion::bic};
  std::size_t lasso_cv_repeats = 20;
  Criterion criterion = Criterion::bic;
  std::size_t k_max = 6;
  std::size_t cv_repeats = 10;
  std::vector<std::string> fixed_inputs;
  SubsetConfig subset;
};

/// Accepts ols, pca, pls, lasso, ss (bic), ss-r2adj, ss-aicc, ss-bic, sscv
/// and fixed:<col>[,<col>...].
MethodSpec parse_method(const std::string& text);

struct PipelineConfig {
  ScalerKind scaler = ScalerKind::standardize;
  bool scaler_on_all_rows = false;
  double prune_threshold = 0.001;
  double theta = 1.0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Normalized and engineering-unit views of one training/testing split.
struct PreparedSplit {
  Scaler scaler;
  Matrix x_train;  ///< normalized
  Vector y_train;
  Matrix raw_train;
  Vector raw_y_train;
  Matrix raw_test;
  Vector raw_y_test;
  IndexList train;
  IndexList test;
};

PreparedSplit prepare_split(const Dataset& data, const SplitPlan& plan, const PipelineConfig& cfg);

/// Fits one method on the normalized training data, prunes low-impact
/// inputs (not for fixed structures) and attaches the scaler.
SensorModel design_sensor(const PreparedSplit& prep, const MethodSpec& method, const PipelineConfig& cfg,
                          std::uint64_t seed);

/// Test RMSE and bias-correction walk of a designed sensor.
EvalReport evaluate_sensor(const SensorModel& model, const PreparedSplit& prep, const Dataset& data,
                           double theta);

struct DesignRun {
  MethodSpec method;
  SensorModel model;
  EvalReport report;
};

/// Method i of repeat r draws its randomness from derive_seed(cfg.seed, {0xde5, r, i}).
std::vector<DesignRun> design_all(const Dataset& data, const SplitPlan& plan, const std::vector<MethodSpec>& methods,
                                  const PipelineConfig& cfg, std::size_t repeat = 0);

/// Aligned text table: one column per method, rows n_p*, RMSE, BC [%].
std::string comparison_table(const std::vector<DesignRun>& runs);

// Benchmark over repeated splits -------------------------------------------

struct RepeatMetrics {
  bool ok = false;
  double rmse = 0.0;
  std::size_t inputs = 0;
  std::size_t latent = 0;
  double bc_percent = 0.0;
  std::string error;
};

struct MethodSummary {
  std::string label;
  BoxStats rmse;
  BoxStats inputs;
  BoxStats bc_percent;
};

struct BenchmarkResult {
  std::vector<std::string> labels;
  std::vector<std::vector<RepeatMetrics>> runs;  ///< [repeat][method]
  std::vector<MethodSummary> summary;
};

std::vector<MethodSummary> summarize(const std::vector<std::string>& labels,
                                     const std::vector<std::vector<RepeatMetrics>>& runs);

/// Repeat r splits with seed derive_seed(cfg.seed, {0xbe7, r}) and then runs
/// design_all. A method that throws on one repeat is recorded as missing for
/// that repeat.
BenchmarkResult benchmark(const Dataset& data, const std::vector<MethodSpec>& methods, SplitKind kind,
                          double fraction, std::size_t repeats, const PipelineConfig& cfg);

}  // namespace softsensor
