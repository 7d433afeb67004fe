#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "softsensor/types.hpp"

namespace softsensor {

double rmse(const Vector& predictions, const Vector& measurements);

/// A lab sample triggers a bias correction when it deviates from the
/// shadow-corrected prediction by more than max(theta * sigma_train, floor).
struct BiasPolicy {
  double theta = 1.0;
  double sigma_train = 0.0;  ///< sample sd of training residuals, engineering units
  double floor = 0.0;
};

struct TraceRow {
  std::size_t row = 0;  ///< 1-based source row
  double time = 0.0;
  double measurement = 0.0;
  double raw = 0.0;
  double corrected = 0.0;  ///< shadow prediction before this sample's update
  bool correction = false;
};

struct EvalReport {
  double rmse = 0.0;  ///< normalized output space, raw predictions
  std::size_t inputs = 0;
  std::size_t latent = 0;
  std::size_t corrections = 0;
  double bc_percent = 0.0;
  std::vector<TraceRow> trace;
  std::vector<std::string> notes;
};

/// Walks the test samples in the given (lab-time) order with a shadow bias.
/// RMSE uses the raw predictions divided by `output_scale`.
EvalReport simulate_bias_correction(const Vector& measurements, const Vector& raw_predictions,
                                    const BiasPolicy& policy, double output_scale = 1.0);

void write_trace_csv(const EvalReport& report, const std::filesystem::path& path);

/// Box-plot statistics: type-7 quartiles, whiskers at the most extreme
/// values within 1.5 IQR of the box.
struct BoxStats {
  std::size_t count = 0;
  std::size_t missing = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;
};

BoxStats box_stats(std::vector<double> values, std::size_t missing = 0);

/// Type-7 (linear interpolation) quantile of sorted values.
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace softsensor
