#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "softsensor/criteria.hpp"
#include "softsensor/dataset.hpp"
#include "softsensor/types.hpp"

namespace softsensor {

/// Latent directions of a PCA or PLS sensor. The coefficient vector of the
/// sensor is directions * score_weights.
struct LatentModel {
  Matrix directions;             ///< n_p x n_latent, unit columns
  Vector score_weights;          ///< n_latent
  std::vector<double> explained; ///< input-variance share per component
};

/// Linear sensor y_n = x_n^T a + bias in normalized coordinates, with the
/// scaler that maps engineering units to those coordinates.
struct SensorModel {
  std::string method;
  Mask support;
  Vector coef;
  double bias = 0.0;
  std::size_t latent = 0;  ///< component count for PCA/PLS, else 0
  std::optional<LatentModel> latent_model;
  Scaler scaler;
  std::vector<std::string> notes;

  std::size_t complexity() const;
  std::vector<std::string> selected_inputs() const;

  /// Engineering-unit form y = b0 + sum_j b_j x_j.
  Vector engineering_coef() const;
  double engineering_bias() const;

  /// Throws InvalidArgument on a column-count mismatch, DataError on non-finite input.
  Vector predict_normalized(const Matrix& x_n) const;
  Vector predict(const Matrix& raw) const;
};

/// Attaches column names and an identity scaler when the model was fit on
/// already-normalized data.
void attach_scaler(SensorModel& model, const Scaler& scaler);

SensorModel fit_ols(const Matrix& x, const Vector& y);
SensorModel fit_bias_only(const Matrix& x, const Vector& y);

/// Least squares on the masked columns; throws InvalidArgument on an empty
/// or wrongly sized support.
SensorModel fit_fixed(const Matrix& x, const Vector& y, const Mask& support);

struct LatentOptions {
  double variance_target = 0.98;
  std::optional<std::size_t> components;  ///< overrides the variance rule
};

SensorModel fit_pca_regression(const Matrix& x, const Vector& y, const LatentOptions& opts = {});
SensorModel fit_pls(const Matrix& x, const Vector& y, const LatentOptions& opts = {});

struct LassoConfig {
  double lambda = 0.0;
  double tolerance = 1e-8;      ///< on the largest coefficient change per sweep
  double kkt_tolerance = 1e-7;  ///< on the subgradient residual
  std::size_t max_sweeps = 100000;
};

/// Minimizer of 0.5 |y - a0 - X a|^2 + lambda |a|_1 by cyclic coordinate
/// descent; throws ConvergenceError after max_sweeps.
SensorModel fit_lasso(const Matrix& x, const Vector& y, const LassoConfig& cfg);

/// Largest |gradient_j| - lambda violation of the LASSO optimality
/// conditions at `coef` (intercept profiled out).
double lasso_kkt_violation(const Matrix& x, const Vector& y, const Vector& coef, double lambda);

/// max |X_c^T y_c|, the smallest lambda with an all-zero solution.
double lasso_lambda_max(const Matrix& x, const Vector& y);

struct LambdaTuning {
  double lambda = 0.0;
  std::vector<double> grid;
  std::vector<double> candidates;  ///< distinct per-criterion minimizers, descending
  std::vector<double> cv_error;    ///< mean validation SSE per candidate
};

LambdaTuning tune_lambda(const Matrix& x, const Vector& y, const std::vector<Criterion>& criteria,
                         std::size_t cv_repeats = 20, std::uint64_t seed = 0, unsigned threads = 1);

/// Drops inputs whose impact |a_j| max_i |x_ij| falls below threshold * max_i |y_i|
/// and refits the survivors (latent models keep their remaining terms).
SensorModel prune_impacts(const SensorModel& model, const Matrix& x, const Vector& y, double threshold = 0.001);

}  // namespace softsensor
