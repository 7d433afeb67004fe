#include "softsensor/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "softsensor/error.hpp"
#include "softsensor/linalg.hpp"
#include "softsensor/parallel.hpp"
#include "softsensor/random.hpp"

namespace softsensor {

namespace {

struct Centered {
  Matrix x;
  Vector y;
  Vector x_mean;
  double y_mean = 0.0;
};

Centered center(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw InvalidArgument("input rows and output length differ");
  if (x.rows() < 1) throw InvalidArgument("no training rows");
  if (x.cols() < 1) throw InvalidArgument("no input columns");
  if (!x.allFinite() || !y.allFinite()) throw DataError("non-finite training data");
  Centered c;
  c.x_mean = x.colwise().mean().transpose();
  c.y_mean = y.mean();
  c.x = x.rowwise() - c.x_mean.transpose();
  c.y = y.array() - c.y_mean;
  return c;
}

std::vector<std::string> default_names(Eigen::Index p) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

SensorModel make_model(std::string method, const Centered& c, Vector coef) {
  SensorModel m;
  m.method = std::move(method);
  m.support.resize(static_cast<std::size_t>(coef.size()));
  for (Eigen::Index j = 0; j < coef.size(); ++j) m.support[static_cast<std::size_t>(j)] = coef[j] != 0.0;
  m.bias = c.y_mean - c.x_mean.dot(coef);
  m.coef = std::move(coef);
  m.scaler = identity_scaler(default_names(m.coef.size()));
  return m;
}

std::size_t choose_components(const std::vector<double>& explained, const LatentOptions& opts, std::size_t cap) {
  if (opts.components) {
    if (*opts.components < 1) throw InvalidArgument("component count must be at least 1");
    return std::min(*opts.components, cap);
  }
  if (!(opts.variance_target > 0.0 && opts.variance_target <= 1.0)) {
    throw InvalidArgument("variance target must lie in (0, 1]");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < explained.size(); ++k) {
    total += explained[k];
    if (total >= opts.variance_target - 1e-12) return k + 1;
  }
  return explained.size();
}

void check_no_constant_column(const Centered& c) {
  for (Eigen::Index j = 0; j < c.x.cols(); ++j)
    if (c.x.col(j).squaredNorm() == 0.0) throw DataError("zero-variance input column " + std::to_string(j + 1));
}

// Cyclic coordinate descent on the Gram form. `coef` is the warm start.
void lasso_cd(const Matrix& gram, const Vector& xty, double lambda, Vector& coef, const LassoConfig& cfg) {
  const Eigen::Index p = gram.rows();
  Vector r = xty - gram * coef;  // r = X^T (y - X a)
  for (std::size_t sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double gjj = gram(j, j);
      if (gjj <= 0.0) {
        coef[j] = 0.0;
        continue;
      }
      const double rho = r[j] + gjj * coef[j];
      double next = 0.0;
      if (rho > lambda) next = (rho - lambda) / gjj;
      else if (rho < -lambda) next = (rho + lambda) / gjj;
      const double delta = next - coef[j];
      if (delta != 0.0) {
        r.noalias() -= gram.col(j) * delta;
        coef[j] = next;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change < cfg.tolerance) {
      r = xty - gram * coef;
      double violation = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) {
        const double v = coef[j] == 0.0 ? std::abs(r[j]) - lambda : std::abs(r[j] - std::copysign(lambda, coef[j]));
        violation = std::max(violation, v);
      }
      if (violation <= cfg.kkt_tolerance) return;
    }
  }
  throw ConvergenceError("lasso did not converge within " + std::to_string(cfg.max_sweeps) + " sweeps");
}

}  // namespace

std::size_t SensorModel::complexity() const {
  return static_cast<std::size_t>(std::count(support.begin(), support.end(), true));
}

std::vector<std::string> SensorModel::selected_inputs() const {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < support.size(); ++j)
    if (support[j]) out.push_back(j < scaler.columns.size() ? scaler.columns[j] : "x" + std::to_string(j + 1));
  return out;
}

Vector SensorModel::engineering_coef() const {
  return (scaler.output_scale * coef.array() / scaler.scale.array()).matrix();
}

double SensorModel::engineering_bias() const {
  const double shift = (coef.array() * scaler.offset.array() / scaler.scale.array()).sum();
  return scaler.output_offset + scaler.output_scale * (bias - shift);
}

Vector SensorModel::predict_normalized(const Matrix& x_n) const {
  if (x_n.cols() != coef.size()) throw InvalidArgument("input column count does not match the model");
  if (!x_n.allFinite()) throw DataError("non-finite input values");
  return (x_n * coef).array() + bias;
}

Vector SensorModel::predict(const Matrix& raw) const {
  if (raw.cols() != coef.size()) throw InvalidArgument("input column count does not match the model");
  if (!raw.allFinite()) throw DataError("non-finite input values");
  return (raw * engineering_coef()).array() + engineering_bias();
}

void attach_scaler(SensorModel& model, const Scaler& scaler) {
  if (scaler.offset.size() != model.coef.size()) throw InvalidArgument("scaler does not match model columns");
  model.scaler = scaler;
}

SensorModel fit_ols(const Matrix& x, const Vector& y) {
  const auto c = center(x, y);
  return make_model("ols", c, solve_ls(c.x, c.y));
}

SensorModel fit_bias_only(const Matrix& x, const Vector& y) {
  const auto c = center(x, y);
  return make_model("bias", c, Vector::Zero(x.cols()));
}

SensorModel fit_fixed(const Matrix& x, const Vector& y, const Mask& support) {
  if (support.size() != static_cast<std::size_t>(x.cols())) throw InvalidArgument("support mask length mismatch");
  IndexList cols;
  for (std::size_t j = 0; j < support.size(); ++j)
    if (support[j]) cols.push_back(j);
  if (cols.empty()) throw InvalidArgument("fixed structure needs a nonempty support");
  const auto c = center(x, y);
  Matrix sub(c.x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = c.x.col(static_cast<Eigen::Index>(cols[k]));
  const Vector a = solve_ls(sub, c.y);
  Vector coef = Vector::Zero(x.cols());
  for (std::size_t k = 0; k < cols.size(); ++k) coef[static_cast<Eigen::Index>(cols[k])] = a[static_cast<Eigen::Index>(k)];
  return make_model("fixed", c, std::move(coef));
}

SensorModel fit_pca_regression(const Matrix& x, const Vector& y, const LatentOptions& opts) {
  const auto c = center(x, y);
  if (c.x.rows() < 2) throw InvalidArgument("pca regression needs at least two rows");
  check_no_constant_column(c);
  const Matrix cov = (c.x.transpose() * c.x) / static_cast<double>(c.x.rows() - 1);
  const auto eig = eigh(0.5 * (cov + cov.transpose()));
  const double total = eig.values.cwiseMax(0.0).sum();

  LatentModel lm;
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) lm.explained.push_back(std::max(eig.values[k], 0.0) / total);
  const auto count = choose_components(lm.explained, opts, lm.explained.size());
  lm.explained.resize(count);
  lm.directions = eig.vectors.leftCols(static_cast<Eigen::Index>(count));
  const Matrix scores = c.x * lm.directions;
  lm.score_weights = solve_ls(scores, c.y);

  auto m = make_model("pca", c, lm.directions * lm.score_weights);
  m.latent = count;
  m.latent_model = std::move(lm);
  if (c.x.rows() <= c.x.cols()) m.notes.push_back("fewer training rows than inputs");
  return m;
}

SensorModel fit_pls(const Matrix& x, const Vector& y, const LatentOptions& opts) {
  const auto c = center(x, y);
  if (c.x.rows() < 2) throw InvalidArgument("pls needs at least two rows");
  check_no_constant_column(c);
  const Eigen::Index p = c.x.cols();
  const double total = c.x.squaredNorm();
  const auto cap = static_cast<Eigen::Index>(std::min<std::size_t>(
      opts.components.value_or(static_cast<std::size_t>(p)), static_cast<std::size_t>(std::min(p, c.x.rows() - 1))));
  if (opts.components && *opts.components < 1) throw InvalidArgument("component count must be at least 1");
  if (!opts.components && !(opts.variance_target > 0.0 && opts.variance_target <= 1.0)) {
    throw InvalidArgument("variance target must lie in (0, 1]");
  }

  Vector s = c.x.transpose() * c.y;  // cross-covariance, up to 1/(n-1)
  const double s0 = s.norm();
  Matrix dirs(p, 0), loads(p, 0);
  LatentModel lm;
  double captured = 0.0;
  for (Eigen::Index a = 0; a < cap; ++a) {
    if (s.norm() <= 1e-12 * std::max(s0, 1e-300)) break;
    const auto dec = svd(s);
    Vector r = dec.u.col(0);
    if (r.dot(s) < 0) r = -r;
    Vector t = c.x * r;
    const double tn = t.norm();
    if (tn <= 1e-14 * std::sqrt(total)) break;
    t /= tn;
    const Vector load = c.x.transpose() * t;

    Vector v = load;
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index k = 0; k < loads.cols(); ++k) v -= loads.col(k).dot(v) * loads.col(k);
    v.normalize();
    s -= v * v.dot(s);

    dirs.conservativeResize(Eigen::NoChange, a + 1);
    dirs.col(a) = r;
    loads.conservativeResize(Eigen::NoChange, a + 1);
    loads.col(a) = v;
    lm.explained.push_back(load.squaredNorm() / total);
    captured += lm.explained.back();
    if (!opts.components && captured >= opts.variance_target - 1e-12) break;
  }
  if (dirs.cols() == 0) throw DataError("output is uncorrelated with every input; no PLS direction exists");

  // Score weights by least squares on the unnormalized scores.
  lm.directions = dirs;
  lm.score_weights = (c.x * dirs).colPivHouseholderQr().solve(c.y);
  auto m = make_model("pls", c, lm.directions * lm.score_weights);
  m.latent = static_cast<std::size_t>(dirs.cols());
  m.latent_model = std::move(lm);
  if (c.x.rows() <= c.x.cols()) m.notes.push_back("fewer training rows than inputs");
  return m;
}

double lasso_lambda_max(const Matrix& x, const Vector& y) {
  const auto c = center(x, y);
  return (c.x.transpose() * c.y).cwiseAbs().maxCoeff();
}

SensorModel fit_lasso(const Matrix& x, const Vector& y, const LassoConfig& cfg) {
  if (!(cfg.lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
  const auto c = center(x, y);
  const Matrix gram = c.x.transpose() * c.x;
  const Vector xty = c.x.transpose() * c.y;
  Vector coef = Vector::Zero(x.cols());
  lasso_cd(gram, xty, cfg.lambda, coef, cfg);
  auto m = make_model("lasso", c, std::move(coef));
  return m;
}

double lasso_kkt_violation(const Matrix& x, const Vector& y, const Vector& coef, double lambda) {
  const auto c = center(x, y);
  const Vector r = c.x.transpose() * (c.y - c.x * coef);
  double violation = 0.0;
  for (Eigen::Index j = 0; j < r.size(); ++j) {
    const double v = coef[j] == 0.0 ? std::abs(r[j]) - lambda : std::abs(r[j] - std::copysign(lambda, coef[j]));
    violation = std::max(violation, v);
  }
  return std::max(violation, 0.0);
}

LambdaTuning tune_lambda(const Matrix& x, const Vector& y, const std::vector<Criterion>& criteria,
                         std::size_t cv_repeats, std::uint64_t seed, unsigned threads) {
  if (criteria.empty()) throw InvalidArgument("lambda tuning needs at least one criterion");
  if (cv_repeats < 1) throw InvalidArgument("lambda tuning needs at least one validation repeat");
  const auto c = center(x, y);
  const auto n = static_cast<std::size_t>(c.x.rows());
  if (n < 4) throw InvalidArgument("lambda tuning needs at least four training rows");
  const Matrix gram = c.x.transpose() * c.x;
  const Vector xty = c.x.transpose() * c.y;
  const double lambda_max = xty.cwiseAbs().maxCoeff();
  const double tss = c.y.squaredNorm();
  LassoConfig cfg;

  LambdaTuning out;
  constexpr int kGrid = 50;
  for (int i = 0; i < kGrid; ++i) out.grid.push_back(lambda_max * std::pow(10.0, -4.0 * i / (kGrid - 1)));

  std::vector<double> best_value(criteria.size(), std::numeric_limits<double>::infinity());
  std::vector<double> best_lambda(criteria.size(), out.grid.front());
  Vector coef = Vector::Zero(c.x.cols());
  for (double lambda : out.grid) {
    lasso_cd(gram, xty, lambda, coef, cfg);
    double rss = (c.y - c.x * coef).squaredNorm();
    if (rss <= 1e-10 * tss) rss = 0.0;
    const auto nnz = static_cast<std::size_t>((coef.array() != 0.0).count());
    for (std::size_t k = 0; k < criteria.size(); ++k) {
      if (!criterion_admissible(criteria[k], n, nnz)) continue;
      const double v = criterion_value(criteria[k], n, rss, nnz);
      if (v < best_value[k]) {
        best_value[k] = v;
        best_lambda[k] = lambda;
      }
    }
  }
  out.candidates = best_lambda;
  std::sort(out.candidates.begin(), out.candidates.end(), std::greater<>());
  out.candidates.erase(std::unique(out.candidates.begin(), out.candidates.end()), out.candidates.end());

  // Repeated 50/50 partitions of the training rows.
  std::vector<std::vector<double>> sse(cv_repeats, std::vector<double>(out.candidates.size(), 0.0));
  parallel_for(cv_repeats, threads, [&](std::size_t r) {
    Rng rng = make_rng(seed, {0x7a3, r});
    IndexList order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t half = (n + 1) / 2;
    Matrix xa(static_cast<Eigen::Index>(half), x.cols()), xb(static_cast<Eigen::Index>(n - half), x.cols());
    Vector ya(static_cast<Eigen::Index>(half)), yb(static_cast<Eigen::Index>(n - half));
    for (std::size_t i = 0; i < n; ++i) {
      const auto src = static_cast<Eigen::Index>(order[i]);
      if (i < half) {
        xa.row(static_cast<Eigen::Index>(i)) = x.row(src);
        ya[static_cast<Eigen::Index>(i)] = y[src];
      } else {
        xb.row(static_cast<Eigen::Index>(i - half)) = x.row(src);
        yb[static_cast<Eigen::Index>(i - half)] = y[src];
      }
    }
    const auto ca = center(xa, ya);
    const Matrix ga = ca.x.transpose() * ca.x;
    const Vector ba = ca.x.transpose() * ca.y;
    Vector a = Vector::Zero(x.cols());
    for (std::size_t k = 0; k < out.candidates.size(); ++k) {
      lasso_cd(ga, ba, out.candidates[k], a, cfg);
      const Vector pred = ((xb.rowwise() - ca.x_mean.transpose()) * a).array() + ca.y_mean;
      sse[r][k] = (yb - pred).squaredNorm();
    }
  });

  out.cv_error.assign(out.candidates.size(), 0.0);
  for (std::size_t k = 0; k < out.candidates.size(); ++k) {
    for (std::size_t r = 0; r < cv_repeats; ++r) out.cv_error[k] += sse[r][k];
    out.cv_error[k] /= static_cast<double>(cv_repeats);
  }
  std::size_t pick = 0;
  for (std::size_t k = 1; k < out.candidates.size(); ++k)
    if (out.cv_error[k] < out.cv_error[pick]) pick = k;
  out.lambda = out.candidates[pick];
  return out;
}

SensorModel prune_impacts(const SensorModel& model, const Matrix& x, const Vector& y, double threshold) {
  if (!(threshold >= 0.0)) throw InvalidArgument("pruning threshold must be nonnegative");
  if (x.cols() != model.coef.size()) throw InvalidArgument("input column count does not match the model");
  if (x.rows() != y.size() || x.rows() < 1) throw InvalidArgument("input rows and output length differ");
  const Vector col_max = x.cwiseAbs().colwise().maxCoeff().transpose();
  const double limit = threshold * y.cwiseAbs().maxCoeff();

  auto dropped = [&](const SensorModel& m) {
    Mask drop(m.support.size(), false);
    bool any = false;
    for (std::size_t j = 0; j < m.support.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      if (m.support[j] && std::abs(m.coef[jj]) * col_max[jj] < limit) {
        drop[j] = true;
        any = true;
      }
    }
    return std::make_pair(drop, any);
  };

  auto [drop, any] = dropped(model);
  if (!any) return model;

  SensorModel out = model;
  if (model.latent_model) {
    // Zero the dropped terms; a least-squares refit would discard the latent structure.
    for (std::size_t j = 0; j < drop.size(); ++j) {
      if (!drop[j]) continue;
      out.coef[static_cast<Eigen::Index>(j)] = 0.0;
      out.support[j] = false;
    }
    out.bias = y.mean() - x.colwise().mean().dot(out.coef);
    return out;
  }

  while (any) {
    Mask keep = out.support;
    for (std::size_t j = 0; j < keep.size(); ++j) keep[j] = keep[j] && !drop[j];
    SensorModel refit = std::count(keep.begin(), keep.end(), true) == 0 ? fit_bias_only(x, y) : fit_fixed(x, y, keep);
    out.coef = refit.coef;
    out.bias = refit.bias;
    out.support = refit.support;
    std::tie(drop, any) = dropped(out);
  }
  if (out.complexity() == 0) out.notes.push_back("all inputs pruned; bias-only sensor");
  return out;
}

}  // namespace softsensor
