#include "softsensor/pretreat.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "softsensor/dataset.hpp"
#include "softsensor/error.hpp"
#include "softsensor/parallel.hpp"
#include "softsensor/random.hpp"

namespace softsensor {

namespace {

constexpr double kMaxCondition = 1e12;

CovarianceModel covariance_of(const Matrix& data, std::span<const std::size_t> rows) {
  const auto p = data.cols();
  CovarianceModel m;
  m.count = rows.size();
  m.mean = Vector::Zero(p);
  for (auto i : rows) m.mean += data.row(static_cast<Eigen::Index>(i)).transpose();
  m.mean /= static_cast<double>(rows.size());
  Matrix centered(static_cast<Eigen::Index>(rows.size()), p);
  for (std::size_t k = 0; k < rows.size(); ++k)
    centered.row(static_cast<Eigen::Index>(k)) = data.row(static_cast<Eigen::Index>(rows[k])) - m.mean.transpose();
  m.cov = (centered.transpose() * centered) / static_cast<double>(rows.size() - 1);
  m.cov = 0.5 * (m.cov + m.cov.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(m.cov, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  m.singular = !(lo > 0.0) || hi / lo >= kMaxCondition;
  return m;
}

// log det of an SPD matrix via Cholesky; -inf if not positive definite.
double log_determinant(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

IndexList all_rows(const Matrix& data) {
  IndexList rows(static_cast<std::size_t>(data.rows()));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

// Rows with the h smallest distances (ties by index), ascending.
IndexList smallest(const Vector& d, std::size_t h) {
  IndexList idx(static_cast<std::size_t>(d.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto less = [&](std::size_t a, std::size_t b) {
    return d[static_cast<Eigen::Index>(a)] < d[static_cast<Eigen::Index>(b)] ||
           (d[static_cast<Eigen::Index>(a)] == d[static_cast<Eigen::Index>(b)] && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(h - 1), idx.end(), less);
  idx.resize(h);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::string to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::t2: return "t2";
    case DetectorKind::mcd: return "mcd";
    case DetectorKind::kmeans: return "kmeans";
  }
  return "t2";
}

DetectorKind parse_detector_kind(const std::string& name) {
  if (name == "t2") return DetectorKind::t2;
  if (name == "mcd") return DetectorKind::mcd;
  if (name == "kmeans") return DetectorKind::kmeans;
  throw InvalidArgument("unknown treatment method '" + name + "'");
}

std::size_t OutlierReport::flagged() const {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), false));
}

IndexList OutlierReport::kept_rows() const {
  IndexList out;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) out.push_back(i);
  return out;
}

void write_report_csv(const OutlierReport& report, const std::filesystem::path& path,
                      std::span<const std::size_t> origin) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "row,distance,kept\n";
  for (std::size_t i = 0; i < report.keep.size(); ++i) {
    out << (origin.empty() ? i + 1 : origin[i]) << ',' << format_double(report.distance[static_cast<Eigen::Index>(i)])
        << ',' << (report.keep[i] ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

CovarianceModel covariance(const Matrix& data, std::span<const std::size_t> rows) {
  if (rows.size() < static_cast<std::size_t>(data.cols()) + 1) {
    throw InvalidArgument("covariance needs at least n_p + 1 rows");
  }
  for (auto i : rows)
    if (i >= static_cast<std::size_t>(data.rows())) throw InvalidArgument("row index out of range");
  return covariance_of(data, rows);
}

CovarianceModel covariance(const Matrix& data) {
  const auto rows = all_rows(data);
  return covariance(data, rows);
}

Vector t2_distances(const Matrix& data, const CovarianceModel& model) {
  if (model.singular) {
    throw DataError("covariance matrix is singular or ill-conditioned; remove collinear columns");
  }
  Eigen::LLT<Matrix> llt(model.cov);
  if (llt.info() != Eigen::Success) throw DataError("covariance matrix is not positive definite");
  Matrix centered = (data.rowwise() - model.mean.transpose()).transpose();
  llt.matrixL().solveInPlace(centered);
  return centered.colwise().squaredNorm().transpose();
}

double chi2_quantile(double dof, double probability) {
  boost::math::chi_squared dist(dof);
  return boost::math::quantile(dist, probability);
}

OutlierReport t2_detect(const Matrix& data, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidArgument("degenerate confidence; must lie in (0, 1)");
  const auto model = covariance(data);
  OutlierReport r;
  r.method = DetectorKind::t2;
  r.distance = t2_distances(data, model);
  r.cutoff = chi2_quantile(static_cast<double>(data.cols()), confidence);
  r.keep.resize(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index i = 0; i < data.rows(); ++i) r.keep[static_cast<std::size_t>(i)] = r.distance[i] <= r.cutoff;
  return r;
}

std::size_t default_h(std::size_t n, std::size_t n_p) {
  if (n <= n_p) throw InvalidArgument("default_h requires n > n_p");
  const std::size_t lower = (n + n_p + 2) / 2;  // ceil((n + n_p + 1) / 2)
  return (lower + n + 1) / 2;
}

double mcd_consistency_factor(std::size_t n, std::size_t n_p, std::size_t h) {
  const double alpha = static_cast<double>(h) / static_cast<double>(n);
  if (alpha >= 1.0) return 1.0;
  const double p = static_cast<double>(n_p);
  const double q = chi2_quantile(p, alpha);
  return alpha / boost::math::gamma_p(p / 2.0 + 1.0, q / 2.0);
}

double mcd_degrees_of_freedom(std::size_t n, std::size_t n_p, std::size_t h) {
  const double alpha = static_cast<double>(h) / static_cast<double>(n);
  if (alpha >= 1.0) return static_cast<double>(n) - 1.0;
  const double p = static_cast<double>(n_p);
  const double q = chi2_quantile(p, alpha);
  const double fp2 = boost::math::gamma_p(p / 2.0 + 1.0, q / 2.0);
  const double fp4 = boost::math::gamma_p(p / 2.0 + 2.0, q / 2.0);
  const double gamma = fp2 / alpha;  // raw scatter = gamma * true scatter
  const double density = boost::math::pdf(boost::math::chi_squared(p), q);

  // Influence function of the (1,1) entry of the consistency-corrected
  // scatter at the standard normal:
  //   IF = (z1^2 1{|z|^2<=q} + a0 + a1 |z|^2 1{..} + a2 1{..}) / ((alpha - 2K) gamma)
  const double kk = density * q * q / (p * (p + 2.0) * gamma);
  const double b = 2.0 * kk / (p * alpha);
  const double a0 = -alpha * gamma + q * alpha / p - b * (q * alpha - p * alpha * gamma);
  const double a1 = -b;
  const double a2 = -q / p + b * q;

  const double es = p * fp2;                 // E[s 1]
  const double es2 = p * (p + 2.0) * fp4;    // E[s^2 1]
  const double ez4 = 3.0 * es2 / (p * (p + 2.0));
  const double ez2 = es / p;
  const double ez2s = es2 / p;
  const double ea2 = a0 * a0 + 2.0 * a0 * (a1 * es + a2 * alpha) + a1 * a1 * es2 + 2.0 * a1 * a2 * es + a2 * a2 * alpha;
  const double eza = a0 * ez2 + a1 * ez2s + a2 * ez2;
  const double denom = (alpha - 2.0 * kk) * gamma;
  const double asv = (ez4 + 2.0 * eza + ea2) / (denom * denom);

  const double m_asy = 2.0 * static_cast<double>(n) / asv;
  return m_asy * std::exp(0.725 - 0.00663 * p - 0.0780 * std::log(static_cast<double>(n)));
}

double mcd_cutoff(std::size_t n, std::size_t n_p, std::size_t h, double confidence, CutoffFamily family) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidArgument("degenerate confidence; must lie in (0, 1)");
  const double p = static_cast<double>(n_p);
  const double c_alpha = mcd_consistency_factor(n, n_p, h);
  if (family == CutoffFamily::f_approximation) {
    const double m = mcd_degrees_of_freedom(n, n_p, h);
    const double dof2 = m - p + 1.0;
    if (dof2 > 0.5) {
      boost::math::fisher_f dist(p, dof2);
      const double f = boost::math::quantile(dist, confidence);
      return std::sqrt(c_alpha * f * p * m / dof2);
    }
  }
  return std::sqrt(c_alpha * chi2_quantile(p, confidence));
}

McdResult mcd_fit(const Matrix& data, const McdConfig& cfg) {
  const auto n = static_cast<std::size_t>(data.rows());
  const auto p = static_cast<std::size_t>(data.cols());
  if (n <= p) throw InvalidArgument("mcd requires more rows than columns");
  if (cfg.restarts < 1) throw InvalidArgument("mcd requires at least one restart");
  const std::size_t h = cfg.h.value_or(default_h(n, p));
  const std::size_t h_min = (n + p + 2) / 2;
  if (h < h_min || h > n) {
    throw InvalidArgument("mcd subset size h=" + std::to_string(h) + " outside [" + std::to_string(h_min) + ", " +
                          std::to_string(n) + "]");
  }

  struct Restart {
    bool valid = false;
    IndexList subset;
    CovarianceModel model;
    double logdet = std::numeric_limits<double>::infinity();
    std::vector<double> history;
    std::size_t violations = 0;
  };
  std::vector<Restart> runs(cfg.restarts);
  const IndexList everything = all_rows(data);

  parallel_for(cfg.restarts, cfg.threads, [&](std::size_t r) {
    Restart& run = runs[r];
    Rng rng = make_rng(cfg.seed, {0x3cd, r});
    IndexList subset;
    subset.reserve(h);
    std::sample(everything.begin(), everything.end(), std::back_inserter(subset), static_cast<std::ptrdiff_t>(h), rng);

    CovarianceModel model = covariance_of(data, subset);
    if (model.singular) return;
    double logdet = log_determinant(model.cov);
    run.history.push_back(logdet);

    for (std::size_t step = 0; step < cfg.max_csteps; ++step) {
      IndexList next = smallest(t2_distances(data, model), h);
      if (next == subset) break;
      CovarianceModel next_model = covariance_of(data, next);
      if (next_model.singular) return;  // degenerate restart, discarded
      const double next_logdet = log_determinant(next_model.cov);
      if (next_logdet > logdet + 1e-10) ++run.violations;
      if (!(next_logdet < logdet - 1e-13)) break;  // no further decrease: keep previous subset
      subset = std::move(next);
      model = std::move(next_model);
      logdet = next_logdet;
      run.history.push_back(logdet);
    }
    run.valid = true;
    run.subset = std::move(subset);
    run.model = std::move(model);
    run.logdet = logdet;
  });

  McdResult out;
  std::size_t best = cfg.restarts;
  std::size_t valid = 0;
  out.report.membership = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    out.report.monotonicity_violations += runs[r].violations;
    if (!runs[r].valid) continue;
    ++valid;
    for (auto i : runs[r].subset) out.report.membership[static_cast<Eigen::Index>(i)] += 1.0;
    if (best == cfg.restarts || runs[r].logdet < runs[best].logdet) best = r;
  }
  if (valid == 0) throw DataError("every mcd restart produced a singular subset covariance");
  out.report.membership /= static_cast<double>(valid);

  out.model = runs[best].model;
  out.subset = runs[best].subset;
  out.report.method = DetectorKind::mcd;
  out.report.h = h;
  out.report.restarts = cfg.restarts;
  out.report.history = runs[best].history;
  out.report.distance = t2_distances(data, out.model).cwiseSqrt();
  out.report.cutoff = mcd_cutoff(n, p, h, cfg.confidence, cfg.cutoff);
  out.report.keep.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.report.keep[i] = out.report.distance[static_cast<Eigen::Index>(i)] <= out.report.cutoff;
  if (valid < cfg.restarts) {
    out.report.notes.push_back(std::to_string(cfg.restarts - valid) + " restart(s) discarded as degenerate");
  }
  return out;
}

// k-means -------------------------------------------------------------------

std::vector<std::size_t> KMeansModel::cluster_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (auto a : assignment) ++sizes[a];
  return sizes;
}

namespace {

struct LloydRun {
  Matrix centers;
  std::vector<std::size_t> assignment;
  double inertia = 0.0;
  std::vector<double> trace;
  std::size_t violations = 0;
};

std::size_t count_distinct_rows(const Matrix& data, std::size_t stop_at) {
  IndexList idx = all_rows(data);
  auto row_less = [&](std::size_t a, std::size_t b) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      const double x = data(static_cast<Eigen::Index>(a), j);
      const double y = data(static_cast<Eigen::Index>(b), j);
      if (x != y) return x < y;
    }
    return false;
  };
  std::sort(idx.begin(), idx.end(), row_less);
  std::size_t distinct = idx.empty() ? 0 : 1;
  for (std::size_t i = 1; i < idx.size() && distinct < stop_at; ++i)
    if (row_less(idx[i - 1], idx[i])) ++distinct;
  return distinct;
}

double assign(const Matrix& data, const Matrix& centers, std::vector<std::size_t>& labels, Vector& dist) {
  const auto n = data.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
      const double d = (data.row(i) - centers.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<std::size_t>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    dist[i] = best_d;
    total += best_d;
  }
  return total;
}

LloydRun lloyd(const Matrix& data, std::size_t k, std::size_t max_iterations, Rng& rng) {
  const auto n = static_cast<std::size_t>(data.rows());
  LloydRun run;
  run.centers.resize(static_cast<Eigen::Index>(k), data.cols());

  // k distinct data points as initial centers.
  IndexList order = all_rows(data);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t chosen = 0;
  for (std::size_t i = 0; i < n && chosen < k; ++i) {
    const auto row = data.row(static_cast<Eigen::Index>(order[i]));
    bool duplicate = false;
    for (std::size_t c = 0; c < chosen && !duplicate; ++c)
      duplicate = (run.centers.row(static_cast<Eigen::Index>(c)) == row);
    if (!duplicate) run.centers.row(static_cast<Eigen::Index>(chosen++)) = row;
  }

  run.assignment.assign(n, 0);
  Vector dist(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> previous;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    const double inertia = assign(data, run.centers, run.assignment, dist);
    if (!run.trace.empty() && inertia > run.trace.back() * (1.0 + 1e-12) + 1e-300) ++run.violations;
    run.trace.push_back(inertia);
    run.inertia = inertia;
    if (run.assignment == previous) break;
    previous = run.assignment;

    Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), data.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(run.assignment[i])) += data.row(static_cast<Eigen::Index>(i));
      ++counts[run.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        run.centers.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
      } else {
        // Empty cluster: restart it at the point farthest from its center.
        Eigen::Index far = 0;
        dist.maxCoeff(&far);
        run.centers.row(static_cast<Eigen::Index>(c)) = data.row(far);
        dist[far] = 0.0;
      }
    }
  }
  return run;
}

// Greedy nearest-center matching: mapping[label in run] = label in reference.
std::vector<std::size_t> align_labels(const Matrix& run_centers, const Matrix& reference) {
  const auto k = static_cast<std::size_t>(reference.rows());
  struct Pair {
    double d;
    std::size_t a, b;
  };
  std::vector<Pair> pairs;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      pairs.push_back({(run_centers.row(static_cast<Eigen::Index>(a)) - reference.row(static_cast<Eigen::Index>(b))).squaredNorm(), a, b});
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    return x.d < y.d || (x.d == y.d && (x.a < y.a || (x.a == y.a && x.b < y.b)));
  });
  std::vector<std::size_t> mapping(k, k);
  std::vector<bool> used(k, false);
  for (const auto& pr : pairs) {
    if (mapping[pr.a] != k || used[pr.b]) continue;
    mapping[pr.a] = pr.b;
    used[pr.b] = true;
  }
  return mapping;
}

}  // namespace

KMeansModel kmeans_fit(const Matrix& data, std::size_t k, const KMeansOptions& opts) {
  const auto n = static_cast<std::size_t>(data.rows());
  if (k < 1 || k > n) throw InvalidArgument("k must lie in [1, n]");
  if (opts.restarts < 1) throw InvalidArgument("kmeans requires at least one restart");
  if (count_distinct_rows(data, k) < k) throw DataError("k exceeds the number of distinct rows");

  std::vector<LloydRun> runs(opts.restarts);
  parallel_for(opts.restarts, opts.threads, [&](std::size_t r) {
    Rng rng = make_rng(opts.seed, {0x4b3, k, r});
    runs[r] = lloyd(data, k, opts.max_iterations, rng);
  });

  KMeansModel m;
  m.k = k;
  std::size_t best = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    m.restart_inertia.push_back(runs[r].inertia);
    m.monotonicity_violations += runs[r].violations;
    m.inertia_trace.push_back(runs[r].trace);
    if (runs[r].inertia < runs[best].inertia) best = r;
  }
  m.centers = runs[best].centers;
  m.best_restart_inertia = runs[best].inertia;

  std::vector<std::uint32_t> votes(n * k, 0);
  for (const auto& run : runs) {
    const auto mapping = align_labels(run.centers, m.centers);
    for (std::size_t i = 0; i < n; ++i) ++votes[i * k + mapping[run.assignment[i]]];
  }
  m.assignment.resize(n);
  m.distance.resize(static_cast<Eigen::Index>(n));
  m.consensus_frequency.resize(static_cast<Eigen::Index>(n));
  m.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t label = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (votes[i * k + c] > votes[i * k + label]) label = c;
    m.assignment[i] = label;
    m.consensus_frequency[static_cast<Eigen::Index>(i)] = static_cast<double>(votes[i * k + label]) / static_cast<double>(runs.size());
    const double d = (data.row(static_cast<Eigen::Index>(i)) - m.centers.row(static_cast<Eigen::Index>(label))).squaredNorm();
    m.distance[static_cast<Eigen::Index>(i)] = d;
    m.inertia += d;
  }
  return m;
}

ElbowResult elbow_select_k(const Matrix& data, std::size_t k_max, const KMeansOptions& opts) {
  if (k_max < 2) throw InvalidArgument("elbow method needs k_max >= 2");
  ElbowResult out;
  for (std::size_t k = 1; k <= k_max; ++k) out.inertia.push_back(kmeans_fit(data, k, opts).best_restart_inertia);

  const double first = out.inertia.front();
  const double last = out.inertia.back();
  std::size_t best_k = 0;
  double best_gap = 0.0;
  if (first > last) {
    for (std::size_t k = 2; k < k_max; ++k) {
      const double x = static_cast<double>(k - 1) / static_cast<double>(k_max - 1);
      const double y = (out.inertia[k - 1] - last) / (first - last);
      const double gap = 1.0 - x - y;  // proportional to the distance below the chord
      if (gap > best_gap) {
        best_gap = gap;
        best_k = k;
      }
    }
  }
  if (best_k == 0 || !(first > 0.0) || out.inertia[best_k - 1] / first > 0.2) {
    out.k = 2;
    out.weak = true;
  } else {
    out.k = best_k;
  }
  return out;
}

OutlierReport kmeans_detect(const KMeansModel& model, double min_cluster_fraction) {
  if (!(min_cluster_fraction > 0.0 && min_cluster_fraction < 1.0)) {
    throw InvalidArgument("min_cluster_fraction must lie in (0, 1)");
  }
  const auto n = model.assignment.size();
  const auto sizes = model.cluster_sizes();
  OutlierReport r;
  r.method = DetectorKind::kmeans;
  r.k = model.k;
  r.restarts = model.restart_inertia.size();
  r.distance = model.distance;
  r.cutoff = std::numeric_limits<double>::quiet_NaN();
  r.monotonicity_violations = model.monotonicity_violations;
  r.keep.resize(n);
  const double limit = min_cluster_fraction * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) r.keep[i] = !(static_cast<double>(sizes[model.assignment[i]]) < limit);
  return r;
}

}  // namespace softsensor
