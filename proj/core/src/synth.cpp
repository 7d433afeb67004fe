#include "softsensor/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "softsensor/error.hpp"
#include "softsensor/random.hpp"

namespace softsensor {

namespace {

void check_spec(const PlantSpec& s, std::size_t n) {
  if (n < 10) throw InvalidArgument("synthetic plant needs at least 10 rows");
  if (s.n_inputs < 1) throw InvalidArgument("synthetic plant needs at least one input");
  if (s.support.size() != s.coefficients.size()) throw InvalidArgument("support and coefficients differ in length");
  for (auto j : s.support)
    if (j >= s.n_inputs) throw InvalidArgument("true support references a column beyond n_inputs");
  auto sorted = s.support;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw InvalidArgument("duplicate support column");
  if (!(s.contamination >= 0.0 && s.contamination < 0.5)) throw InvalidArgument("contamination must lie in [0, 0.5)");
  if (!(s.outlier_magnitude >= 0.0)) throw InvalidArgument("outlier magnitude must be nonnegative");
  if (!(s.noise_sd >= 0.0)) throw InvalidArgument("noise sd must be nonnegative");
  if (s.stride < 1) throw InvalidArgument("lab stride must be at least 1");
  if (s.block_size < 1) throw InvalidArgument("block size must be at least 1");
  if (!(s.block_correlation >= 0.0 && s.block_correlation < 1.0)) throw InvalidArgument("block correlation must lie in [0, 1)");
  if (!s.input_offset.empty() && s.input_offset.size() != s.n_inputs) throw InvalidArgument("input_offset length mismatch");
  if (!s.input_scale.empty() && s.input_scale.size() != s.n_inputs) throw InvalidArgument("input_scale length mismatch");
  for (double v : s.input_scale)
    if (!(v > 0.0)) throw InvalidArgument("input scales must be positive");
  for (const auto& [a, b] : s.shutdowns)
    if (a < 1 || b > n || a > b) throw InvalidArgument("shutdown interval outside the generated rows");
  for (const auto& r : s.regimes) {
    if (r.start < 1 || r.start > n) throw InvalidArgument("regime start outside the generated rows");
    if (!r.coef_delta.empty() && r.coef_delta.size() != s.n_inputs) throw InvalidArgument("regime coef_delta length mismatch");
  }
}

}  // namespace

SynthResult generate(const PlantSpec& spec, std::size_t n) {
  check_spec(spec, n);
  const std::size_t p = spec.n_inputs;
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(p);

  Vector offset(cols), scale(cols);
  for (std::size_t j = 0; j < p; ++j) {
    offset[static_cast<Eigen::Index>(j)] = spec.input_offset.empty() ? 50.0 + 25.0 * static_cast<double>(j) : spec.input_offset[j];
    scale[static_cast<Eigen::Index>(j)] = spec.input_scale.empty() ? 1.0 + 0.5 * static_cast<double>(j) : spec.input_scale[j];
  }

  SynthResult out;
  auto& t = out.truth;
  t.outlier.assign(n, false);
  t.shutdown.assign(n, false);
  t.support.assign(p, false);
  t.coefficients = Vector::Zero(cols);
  t.intercept = spec.intercept;
  for (std::size_t k = 0; k < spec.support.size(); ++k) {
    t.support[spec.support[k]] = true;
    t.coefficients[static_cast<Eigen::Index>(spec.support[k])] = spec.coefficients[k];
  }
  for (const auto& [a, b] : spec.shutdowns)
    for (std::size_t i = a - 1; i < b; ++i) t.shutdown[i] = true;

  // Clean inputs: each block of columns shares one latent factor.
  Rng input_rng = make_rng(spec.seed, {1});
  std::normal_distribution<double> normal(0.0, 1.0);
  const double shared = std::sqrt(spec.block_correlation);
  const double own = std::sqrt(1.0 - spec.block_correlation);
  const std::size_t blocks = (p + spec.block_size - 1) / spec.block_size;
  Matrix z(rows, cols);
  std::vector<double> factor(blocks);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (auto& f : factor) f = normal(input_rng);
    for (std::size_t j = 0; j < p; ++j) z(i, static_cast<Eigen::Index>(j)) = shared * factor[j / spec.block_size] + own * normal(input_rng);
  }
  Matrix clean = (z.array().rowwise() * scale.transpose().array()).matrix().rowwise() + offset.transpose();

  t.clean_output.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    Vector coef = t.coefficients;
    double bias = spec.intercept;
    for (const auto& r : spec.regimes) {
      if (static_cast<std::size_t>(i) + 1 < r.start) continue;
      bias += r.bias;
      for (std::size_t j = 0; j < r.coef_delta.size(); ++j) coef[static_cast<Eigen::Index>(j)] += r.coef_delta[j];
    }
    t.clean_output[i] = bias + clean.row(i).dot(coef);
  }

  Matrix inputs = clean;
  for (Eigen::Index i = 0; i < rows; ++i)
    if (t.shutdown[static_cast<std::size_t>(i)]) inputs.row(i) -= (spec.shutdown_shift * scale).transpose();

  // Outliers on non-shutdown rows.
  IndexList eligible;
  for (std::size_t i = 0; i < n; ++i)
    if (!t.shutdown[i]) eligible.push_back(i);
  const auto n_out = static_cast<std::size_t>(std::llround(spec.contamination * static_cast<double>(eligible.size())));
  Rng outlier_rng = make_rng(spec.seed, {3});
  IndexList chosen;
  std::sample(eligible.begin(), eligible.end(), std::back_inserter(chosen), static_cast<std::ptrdiff_t>(n_out), outlier_rng);
  std::bernoulli_distribution coin(0.5);
  for (auto i : chosen) {
    t.outlier[i] = true;
    for (Eigen::Index j = 0; j < cols; ++j)
      inputs(static_cast<Eigen::Index>(i), j) += (coin(outlier_rng) ? 1.0 : -1.0) * spec.outlier_magnitude * scale[j];
  }

  Rng noise_rng = make_rng(spec.seed, {2});
  Vector output = Vector::Constant(rows, std::numeric_limits<double>::quiet_NaN());
  Mask lab(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = normal(noise_rng);
    if (i % spec.stride != 0 || t.shutdown[i]) continue;
    lab[i] = true;
    output[static_cast<Eigen::Index>(i)] = t.clean_output[static_cast<Eigen::Index>(i)] + spec.noise_sd * e;
  }

  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  out.data = make_dataset(std::move(names), std::move(inputs), std::move(output), std::move(lab));
  return out;
}

void write_truth_csv(const SynthResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "row,outlier,shutdown,lab,y_true\n";
  const auto& t = result.truth;
  for (std::size_t i = 0; i < t.outlier.size(); ++i) {
    out << i + 1 << ',' << (t.outlier[i] ? 1 : 0) << ',' << (t.shutdown[i] ? 1 : 0) << ','
        << (result.data.has_output[i] ? 1 : 0) << ',' << format_double(t.clean_output[static_cast<Eigen::Index>(i)]) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace softsensor
