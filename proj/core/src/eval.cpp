#include "softsensor/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "softsensor/dataset.hpp"
#include "softsensor/error.hpp"

namespace softsensor {

double rmse(const Vector& predictions, const Vector& measurements) {
  if (predictions.size() != measurements.size()) throw InvalidArgument("rmse: length mismatch");
  if (predictions.size() < 1) throw InvalidArgument("rmse: no samples");
  return std::sqrt((predictions - measurements).squaredNorm() / static_cast<double>(predictions.size()));
}

EvalReport simulate_bias_correction(const Vector& measurements, const Vector& raw_predictions,
                                    const BiasPolicy& policy, double output_scale) {
  if (!(policy.theta > 0.0)) throw InvalidArgument("bias threshold multiplier must be positive");
  if (!(policy.sigma_train >= 0.0) || !(policy.floor >= 0.0)) throw InvalidArgument("negative residual scale");
  if (!(output_scale > 0.0)) throw InvalidArgument("output scale must be positive");
  EvalReport r;
  r.rmse = rmse(raw_predictions, measurements) / output_scale;
  const double threshold = std::max(policy.theta * policy.sigma_train, policy.floor);
  if (threshold == 0.0) r.notes.push_back("zero residual scale: every nonzero deviation triggers a correction");

  double shadow = 0.0;
  for (Eigen::Index i = 0; i < measurements.size(); ++i) {
    TraceRow t;
    t.row = static_cast<std::size_t>(i) + 1;
    t.measurement = measurements[i];
    t.raw = raw_predictions[i];
    t.corrected = t.raw + shadow;
    if (std::isinf(policy.theta)) {
      t.correction = false;
    } else {
      t.correction = std::abs(t.measurement - t.corrected) > threshold;
    }
    if (t.correction) {
      shadow = t.measurement - t.raw;
      ++r.corrections;
    }
    r.trace.push_back(t);
  }
  r.bc_percent = 100.0 * static_cast<double>(r.corrections) / static_cast<double>(measurements.size());
  return r;
}

void write_trace_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "row,time,measurement,raw,corrected,correction\n";
  for (const auto& t : report.trace) {
    out << t.row << ',' << format_double(t.time) << ',' << format_double(t.measurement) << ',' << format_double(t.raw)
        << ',' << format_double(t.corrected) << ',' << (t.correction ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::vector<double> values, std::size_t missing) {
  BoxStats b;
  b.missing = missing;
  b.count = values.size();
  if (values.empty()) {
    b.mean = b.median = b.q1 = b.q3 = b.whisker_low = b.whisker_high = std::nan("");
    return b;
  }
  std::sort(values.begin(), values.end());
  b.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  b.median = quantile_sorted(values, 0.5);
  b.q1 = quantile_sorted(values, 0.25);
  b.q3 = quantile_sorted(values, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr;
  const double hi = b.q3 + 1.5 * iqr;
  b.whisker_low = b.q1;
  b.whisker_high = b.q3;
  for (double v : values) {
    if (v < lo || v > hi) {
      b.outliers.push_back(v);
      continue;
    }
    b.whisker_low = std::min(b.whisker_low, v);
    b.whisker_high = std::max(b.whisker_high, v);
  }
  return b;
}

}  // namespace softsensor
