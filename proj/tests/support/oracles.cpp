#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace softsensor::testing {

namespace {

std::vector<std::size_t> members(SupportMask m, std::size_t p) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < p; ++j)
    if ((m >> j) & 1U) out.push_back(j);
  return out;
}

double own_criterion(Criterion kind, std::size_t n, double rss, std::size_t c) {
  const double nn = static_cast<double>(n);
  const double cc = static_cast<double>(c);
  switch (kind) {
    case Criterion::r2adj:
      return rss / (nn - cc - 1.0);
    case Criterion::aicc:
      return rss == 0.0 ? -std::numeric_limits<double>::infinity() : nn * std::log(rss / nn) + 2.0 * cc;
    case Criterion::bic:
      return rss == 0.0 ? -std::numeric_limits<double>::infinity() : nn * std::log(rss / nn) + std::log(nn) * cc;
  }
  return 0.0;
}

bool admissible(Criterion kind, std::size_t n, std::size_t c) {
  if (c >= n) return false;
  if (kind == Criterion::r2adj) return n >= c + 2;
  return true;
}

// Relative tie, then fewer columns, then the lexicographically smaller index list.
bool prefer(double a, const std::vector<std::size_t>& sa, double b, const std::vector<std::size_t>& sb) {
  const bool tie = a == b || (std::isfinite(a) && std::isfinite(b) &&
                              std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)));
  if (!tie) return a < b;
  if (sa.size() != sb.size()) return sa.size() < sb.size();
  return std::lexicographical_compare(sa.begin(), sa.end(), sb.begin(), sb.end());
}

}  // namespace

Instance random_instance(std::uint64_t seed, std::size_t n, std::size_t p, double noise_sd) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::bernoulli_distribution active(0.5);
  Instance inst;
  inst.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    const double common = g(rng);
    for (std::size_t j = 0; j < p; ++j)
      inst.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.4 * common + g(rng);
  }
  inst.beta.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j)
    if (active(rng)) inst.beta[j] = (g(rng) < 0 ? -1.0 : 1.0) * u(rng);
  inst.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double v = 3.0;
    for (std::size_t j = 0; j < p; ++j) v += inst.beta[j] * inst.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    inst.y[static_cast<Eigen::Index>(i)] = v + noise_sd * g(rng);
  }
  return inst;
}

QrFit qr_fit(const Matrix& x, const Vector& y, const std::vector<std::size_t>& support) {
  const auto n = x.rows();
  Matrix a(n, static_cast<Eigen::Index>(support.size()) + 1);
  a.col(0).setOnes();
  for (std::size_t k = 0; k < support.size(); ++k)
    a.col(static_cast<Eigen::Index>(k) + 1) = x.col(static_cast<Eigen::Index>(support[k]));
  const Vector sol = a.colPivHouseholderQr().solve(y);
  QrFit f;
  f.intercept = sol[0];
  f.coef = sol.tail(sol.size() - 1);
  f.rss = (y - a * sol).squaredNorm();
  return f;
}

EnumResult enumerate_best_subset(const Matrix& x, const Vector& y, Criterion kind) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto p = static_cast<std::size_t>(x.cols());
  const double tss = (y.array() - y.mean()).square().sum();
  EnumResult best;
  std::vector<std::size_t> best_idx;
  bool found = false;
  for (SupportMask m = 0; m < (SupportMask{1} << p); ++m) {
    const auto idx = members(m, p);
    if (!admissible(kind, n, idx.size())) continue;
    auto fit = qr_fit(x, y, idx);
    const double rss = fit.rss <= 1e-10 * tss ? 0.0 : fit.rss;
    const double obj = own_criterion(kind, n, rss, idx.size());
    if (!found || prefer(obj, idx, best.objective, best_idx)) {
      best = {m, obj, fit};
      best_idx = idx;
      found = true;
    }
  }
  return best;
}

EnumResult enumerate_cv(const Matrix& x, const Vector& y, const FoldPlan& plan) {
  const auto p = static_cast<std::size_t>(x.cols());
  struct Fold {
    Matrix xt, xv;
    Vector yt, yv;
  };
  std::vector<Fold> folds;
  double scale = 0.0;
  for (std::size_t k = 0; k < plan.k; ++k) {
    const auto tr = plan.training(k);
    const auto& va = plan.folds[k];
    Fold f{Matrix(static_cast<Eigen::Index>(tr.size()), x.cols()), Matrix(static_cast<Eigen::Index>(va.size()), x.cols()),
           Vector(static_cast<Eigen::Index>(tr.size())), Vector(static_cast<Eigen::Index>(va.size()))};
    for (std::size_t i = 0; i < tr.size(); ++i) {
      f.xt.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(tr[i]));
      f.yt[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(tr[i])];
    }
    for (std::size_t i = 0; i < va.size(); ++i) {
      f.xv.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(va[i]));
      f.yv[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(va[i])];
    }
    scale += (f.yv.array() - f.yt.mean()).square().sum();
    folds.push_back(std::move(f));
  }
  EnumResult best;
  std::vector<std::size_t> best_idx;
  bool found = false;
  for (SupportMask m = 1; m < (SupportMask{1} << p); ++m) {
    const auto idx = members(m, p);
    double total = 0.0;
    for (const auto& f : folds) {
      const auto fit = qr_fit(f.xt, f.yt, idx);
      for (Eigen::Index i = 0; i < f.xv.rows(); ++i) {
        double pred = fit.intercept;
        for (std::size_t k = 0; k < idx.size(); ++k) pred += fit.coef[static_cast<Eigen::Index>(k)] * f.xv(i, static_cast<Eigen::Index>(idx[k]));
        total += (f.yv[i] - pred) * (f.yv[i] - pred);
      }
    }
    if (total <= 1e-10 * scale) total = 0.0;
    if (!found || prefer(total, idx, best.objective, best_idx)) {
      best = {m, total, qr_fit(x, y, idx)};
      best_idx = idx;
      found = true;
    }
  }
  return best;
}

double kkt_residual(const Matrix& x, const Vector& y, const Vector& coef, double lambda) {
  const Matrix xc = x.rowwise() - x.colwise().mean();
  const Vector yc = (y.array() - y.mean()).matrix();
  const Vector grad = xc.transpose() * (yc - xc * coef);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < coef.size(); ++j) {
    const double v = coef[j] == 0.0 ? std::abs(grad[j]) - lambda
                                    : std::abs(grad[j] - lambda * (coef[j] > 0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace softsensor::testing
