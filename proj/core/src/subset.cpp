#include "softsensor/subset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <unordered_map>

#include "softsensor/dataset.hpp"
#include "softsensor/error.hpp"
#include "softsensor/linalg.hpp"
#include "softsensor/parallel.hpp"
#include "softsensor/random.hpp"

namespace softsensor {

IndexList mask_indices(SupportMask mask) {
  IndexList out;
  while (mask != 0) {
    out.push_back(static_cast<std::size_t>(std::countr_zero(mask)));
    mask &= mask - 1;
  }
  return out;
}

SupportMask indices_mask(const IndexList& indices) {
  SupportMask m = 0;
  for (auto j : indices) {
    if (j >= 63) throw InvalidArgument("subset selection supports at most 63 columns");
    m |= SupportMask{1} << j;
  }
  return m;
}

Mask to_mask(SupportMask mask, std::size_t n_p) {
  Mask out(n_p, false);
  for (auto j : mask_indices(mask))
    if (j < n_p) out[j] = true;
  return out;
}

bool objectives_tie(double a, double b) {
  if (a == b) return true;
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  return std::abs(a - b) <= kTieTolerance * std::max(std::abs(a), std::abs(b));
}

bool better_candidate(double obj_a, SupportMask a, double obj_b, SupportMask b) {
  if (!objectives_tie(obj_a, obj_b)) return obj_a < obj_b;
  const int ca = std::popcount(a);
  const int cb = std::popcount(b);
  if (ca != cb) return ca < cb;
  if (a == b) return false;
  const SupportMask diff = a ^ b;
  return (a & (diff & (~diff + 1))) != 0;  // lowest differing column belongs to a
}

void SearchLog::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  auto support_text = [](SupportMask m) {
    std::string s = "{";
    bool first = true;
    for (auto j : mask_indices(m)) {
      if (!first) s += ' ';
      s += std::to_string(j + 1);
      first = false;
    }
    return s + "}";
  };
  out << "nodes " << nodes << "\nevaluations " << evaluations << "\nexact " << (exact ? 1 : 0) << '\n';
  for (const auto& inc : incumbents)
    out << "incumbent " << inc.node << ' ' << format_double(inc.objective) << ' ' << support_text(inc.support) << '\n';
  for (const auto& e : trace)
    out << "node " << e.node << ' ' << format_double(e.bound) << ' ' << support_text(e.included) << ' '
        << support_text(e.undecided) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kExactFit = 1e-10;

// Centered least-squares system with its Gram matrix.
struct System {
  Matrix x;  // centered
  Vector y;  // centered
  Matrix gram;
  Vector xty;

  System(Matrix xc, Vector yc) : x(std::move(xc)), y(std::move(yc)) {
    gram = x.transpose() * x;
    xty = x.transpose() * y;
  }
};

struct SubFit {
  Vector coef;  // over the support columns, ascending
  double rss = 0.0;
};

Matrix columns(const Matrix& m, const IndexList& idx) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(static_cast<Eigen::Index>(idx[k]));
  return out;
}

SubFit fit_support(const System& sys, const IndexList& idx, bool want_rss = true) {
  SubFit f;
  const auto c = static_cast<Eigen::Index>(idx.size());
  if (c == 0) {
    f.coef.resize(0);
    f.rss = sys.y.squaredNorm();
    return f;
  }
  Matrix g(c, c);
  Vector b(c);
  for (Eigen::Index r = 0; r < c; ++r) {
    b[r] = sys.xty[static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)])];
    for (Eigen::Index s = 0; s < c; ++s)
      g(r, s) = sys.gram(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]), static_cast<Eigen::Index>(idx[static_cast<std::size_t>(s)]));
  }
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() == Eigen::Success && llt.rcond() > 1e-10) {
    f.coef = llt.solve(b);
  } else {
    f.coef = Eigen::CompleteOrthogonalDecomposition<Matrix>(columns(sys.x, idx)).solve(sys.y);
  }
  if (want_rss) f.rss = (sys.y - columns(sys.x, idx) * f.coef).squaredNorm();
  return f;
}

System centered_system(const Matrix& x, const Vector& y) {
  const Vector xm = x.colwise().mean().transpose();
  const double ym = y.mean();
  return System(x.rowwise() - xm.transpose(), (y.array() - ym).matrix());
}

struct Evaluation {
  double objective = kInf;  // candidate value of the support itself
  double relaxed = kInf;    // bound ingredient for nodes whose I u U equals the support
  Vector magnitude;         // per-column branching weight, length n_p
};

struct Outcome {
  SupportMask support = 0;
  double objective = kInf;
  bool found = false;
  SearchLog log;
};

// Best-first branch-and-bound over supports. A node fixes an included set I
// and an undecided set U; every descendant support S satisfies I <= S <= I u U.
template <class Problem>
Outcome branch_and_bound(Problem& prob, std::size_t n_p, bool allow_empty, std::size_t budget, bool record,
                         const std::vector<SupportMask>& warm) {
  struct Node {
    SupportMask inc;
    SupportMask und;
    double bound;
  };
  auto worse = [](const Node& a, const Node& b) {
    if (a.bound != b.bound) return a.bound > b.bound;
    const int ca = std::popcount(a.inc), cb = std::popcount(b.inc);
    if (ca != cb) return ca > cb;
    if (a.inc != b.inc) return a.inc > b.inc;
    return a.und > b.und;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> queue(worse);
  std::unordered_map<SupportMask, Evaluation> memo;
  Outcome out;

  auto get = [&](SupportMask s) -> const Evaluation& {
    auto it = memo.find(s);
    if (it != memo.end()) return it->second;
    ++out.log.evaluations;
    return memo.emplace(s, prob.evaluate(s)).first->second;
  };
  auto consider = [&](SupportMask s) {
    if (s == 0 && !allow_empty) return;
    const double obj = get(s).objective;
    if (obj == kInf) return;
    if (!out.found || better_candidate(obj, s, out.objective, out.support)) {
      out.found = true;
      out.objective = obj;
      out.support = s;
      out.log.incumbents.push_back({out.log.nodes, obj, s});
    }
  };
  auto prunable = [&](double bound, SupportMask inc) {
    if (bound == kInf) return true;
    if (!out.found) return false;
    if (objectives_tie(bound, out.objective)) return std::popcount(inc) >= std::popcount(out.support);
    return bound > out.objective;
  };

  for (auto s : warm) consider(s);

  const SupportMask all = n_p == 64 ? ~SupportMask{0} : (SupportMask{1} << n_p) - 1;
  queue.push({0, all, prob.bound(get(all), 0)});
  out.log.exact = true;
  while (!queue.empty()) {
    if (budget != 0 && out.log.nodes >= budget) {
      out.log.exact = false;
      break;
    }
    const Node node = queue.top();
    queue.pop();
    if (prunable(node.bound, node.inc)) continue;
    ++out.log.nodes;
    if (record) out.log.trace.push_back({out.log.nodes, node.inc, node.und, node.bound});

    consider(node.inc | node.und);
    consider(node.inc);
    if (node.und == 0) continue;

    const auto& rel = get(node.inc | node.und);
    std::size_t pick = 64;
    double pick_mag = -1.0;
    for (auto j : mask_indices(node.und)) {
      const double m = rel.magnitude[static_cast<Eigen::Index>(j)];
      if (m > pick_mag) {
        pick_mag = m;
        pick = j;
      }
    }
    const SupportMask bit = SupportMask{1} << pick;
    const std::size_t card = static_cast<std::size_t>(std::popcount(node.inc));
    const Node with{node.inc | bit, node.und & ~bit, prob.bound(rel, card + 1)};
    const Node without{node.inc, node.und & ~bit, prob.bound(get(node.inc | (node.und & ~bit)), card)};
    if (!prunable(with.bound, with.inc)) queue.push(with);
    if (!prunable(without.bound, without.inc)) queue.push(without);
  }
  return out;
}

// Criterion objective on the training rows.
struct CriterionProblem {
  const System& sys;
  Criterion kind;
  std::size_t n;
  double tss;

  double clamp(double rss) const { return rss <= kExactFit * tss ? 0.0 : rss; }

  Evaluation evaluate(SupportMask s) const {
    const auto idx = mask_indices(s);
    const auto fit = fit_support(sys, idx);
    Evaluation e;
    e.relaxed = clamp(fit.rss);
    if (criterion_admissible(kind, n, idx.size())) e.objective = criterion_value(kind, n, e.relaxed, idx.size());
    e.magnitude = Vector::Zero(sys.x.cols());
    for (std::size_t k = 0; k < idx.size(); ++k)
      e.magnitude[static_cast<Eigen::Index>(idx[k])] = std::abs(fit.coef[static_cast<Eigen::Index>(k)]);
    return e;
  }

  double bound(const Evaluation& relaxed, std::size_t included) const {
    if (!criterion_admissible(kind, n, included)) return kInf;
    return criterion_value(kind, n, relaxed.relaxed, included);
  }
};

struct FoldSystems {
  System train;
  Matrix val_x;  // centered on training means
  Vector val_y;
  System val_own;  // centered on validation means
};

struct CvProblem {
  std::vector<FoldSystems> folds;
  double scale = 0.0;  // validation error of the mean-only predictor
  std::size_t n_p = 0;

  CvProblem(const Matrix& x, const Vector& y, const FoldPlan& plan) : n_p(static_cast<std::size_t>(x.cols())) {
    for (std::size_t k = 0; k < plan.k; ++k) {
      const auto tr = plan.training(k);
      const auto& va = plan.folds[k];
      Matrix xt(static_cast<Eigen::Index>(tr.size()), x.cols());
      Vector yt(static_cast<Eigen::Index>(tr.size()));
      for (std::size_t i = 0; i < tr.size(); ++i) {
        xt.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(tr[i]));
        yt[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(tr[i])];
      }
      Matrix xv(static_cast<Eigen::Index>(va.size()), x.cols());
      Vector yv(static_cast<Eigen::Index>(va.size()));
      for (std::size_t i = 0; i < va.size(); ++i) {
        xv.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(va[i]));
        yv[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(va[i])];
      }
      const Vector xm = xt.colwise().mean().transpose();
      const double ym = yt.mean();
      Matrix vx = xv.rowwise() - xm.transpose();
      Vector vy = (yv.array() - ym).matrix();
      scale += vy.squaredNorm();
      folds.push_back({centered_system(xt, yt), std::move(vx), std::move(vy), centered_system(xv, yv)});
    }
  }

  double clamp(double v) const { return v <= kExactFit * scale ? 0.0 : v; }

  Evaluation evaluate(SupportMask s) const {
    const auto idx = mask_indices(s);
    Evaluation e;
    e.magnitude = Vector::Zero(static_cast<Eigen::Index>(n_p));
    double total = 0.0, lower = 0.0;
    for (const auto& f : folds) {
      const auto fit = fit_support(f.train, idx, false);
      const Vector err = idx.empty() ? f.val_y : Vector(f.val_y - columns(f.val_x, idx) * fit.coef);
      total += err.squaredNorm();
      lower += fit_support(f.val_own, idx).rss;
      for (std::size_t k = 0; k < idx.size(); ++k)
        e.magnitude[static_cast<Eigen::Index>(idx[k])] += std::abs(fit.coef[static_cast<Eigen::Index>(k)]);
    }
    e.objective = clamp(total);
    e.relaxed = clamp(lower);
    return e;
  }

  double bound(const Evaluation& relaxed, std::size_t) const { return relaxed.relaxed; }
};

// Greedy forward selection; returns the nested supports of size 1..n_p.
template <class Problem>
std::vector<SupportMask> forward_path(const Problem& prob, std::size_t n_p) {
  std::vector<SupportMask> path;
  SupportMask current = 0;
  for (std::size_t step = 0; step < n_p; ++step) {
    SupportMask best = 0;
    double best_val = kInf;
    for (std::size_t j = 0; j < n_p; ++j) {
      const SupportMask bit = SupportMask{1} << j;
      if (current & bit) continue;
      const double v = prob.evaluate(current | bit).relaxed;
      if (best == 0 || v < best_val) {
        best_val = v;
        best = current | bit;
      }
    }
    current = best;
    path.push_back(current);
  }
  return path;
}

void check_problem(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw InvalidArgument("input rows and output length differ");
  if (x.cols() < 1) throw InvalidArgument("subset selection needs at least one column");
  if (x.cols() > 63) throw InvalidArgument("subset selection supports at most 63 columns");
  if (x.rows() < 2) throw InvalidArgument("subset selection needs at least two training rows");
  if (!x.allFinite() || !y.allFinite()) throw DataError("non-finite training data");
}

}  // namespace

SubsetResult best_subset(const Matrix& x, const Vector& y, Criterion kind, const SubsetConfig& cfg) {
  check_problem(x, y);
  if (cfg.node_budget < 1 || cfg.exact_limit < 1) throw InvalidArgument("subset budgets must be at least 1");
  const auto n_p = static_cast<std::size_t>(x.cols());
  const auto n = static_cast<std::size_t>(x.rows());
  const System sys = centered_system(x, y);

  double big_m = 0.0;
  if (cfg.big_m) {
    big_m = *cfg.big_m;
    if (!(big_m > 0.0)) throw InvalidArgument("coefficient bound must be positive");
  } else {
    big_m = 10.0 * solve_ls(sys.x, sys.y).cwiseAbs().maxCoeff();
    if (!(big_m > 0.0)) big_m = 1.0;
  }

  CriterionProblem prob{sys, kind, n, sys.y.squaredNorm()};
  const bool bounded = n_p > cfg.exact_limit;
  std::vector<SupportMask> warm;
  if (bounded) warm = forward_path(prob, n_p);
  auto outcome = branch_and_bound(prob, n_p, true, bounded ? cfg.node_budget : 0, cfg.record_log, warm);
  if (!outcome.found) throw DataError("subset search found no admissible support");

  SubsetResult res;
  res.support = outcome.support;
  res.objective = outcome.objective;
  res.log = std::move(outcome.log);
  res.model = res.support == 0 ? fit_bias_only(x, y) : fit_fixed(x, y, to_mask(res.support, n_p));
  res.model.method = "ss-" + to_string(kind);
  res.model.support = to_mask(res.support, n_p);
  if (!res.log.exact) res.model.notes.push_back("heuristic: node budget exhausted before optimality was proven");
  if (res.model.coef.size() > 0 && res.model.coef.cwiseAbs().maxCoeff() > big_m) {
    res.model.notes.push_back("coefficient bound " + format_double(big_m) + " would bind");
  }
  return res;
}

IndexList FoldPlan::training(std::size_t fold) const {
  IndexList out;
  for (std::size_t k = 0; k < folds.size(); ++k)
    if (k != fold) out.insert(out.end(), folds[k].begin(), folds[k].end());
  std::sort(out.begin(), out.end());
  return out;
}

FoldPlan make_folds(std::size_t m, std::size_t k, std::size_t n_p, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("fold count must be at least 2");
  if (k > m) throw InvalidArgument("more folds than training rows");
  const std::size_t largest = (m + k - 1) / k;
  if (m - largest < n_p) {
    throw InvalidArgument("fold training parts of " + std::to_string(m - largest) + " rows are smaller than n_p=" +
                          std::to_string(n_p));
  }
  IndexList order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, {0xf01d});
  std::shuffle(order.begin(), order.end(), rng);
  FoldPlan plan;
  plan.k = k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = m / k + (f < m % k ? 1 : 0);
    IndexList fold(order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(fold.begin(), fold.end());
    plan.folds.push_back(std::move(fold));
    pos += size;
  }
  return plan;
}

double cv_objective(const Matrix& x, const Vector& y, const FoldPlan& plan, SupportMask support) {
  check_problem(x, y);
  CvProblem prob(x, y, plan);
  return prob.evaluate(support).objective;
}

CvSolution ss_cv_solve(const Matrix& x, const Vector& y, const FoldPlan& plan, const SubsetConfig& cfg) {
  check_problem(x, y);
  if (plan.k < 2 || plan.folds.size() != plan.k) throw InvalidArgument("invalid fold plan");
  std::size_t total = 0;
  for (const auto& f : plan.folds) total += f.size();
  if (total != static_cast<std::size_t>(x.rows())) throw InvalidArgument("fold plan does not cover the training rows");
  const auto n_p = static_cast<std::size_t>(x.cols());
  CvProblem prob(x, y, plan);
  const bool bounded = n_p > cfg.exact_limit;
  std::vector<SupportMask> warm;
  if (bounded) warm = forward_path(prob, n_p);
  auto outcome = branch_and_bound(prob, n_p, false, bounded ? cfg.node_budget : 0, cfg.record_log, warm);
  if (!outcome.found) throw DataError("cross-validation search found no support");
  return {outcome.support, outcome.objective, std::move(outcome.log)};
}

std::size_t lower_median(std::vector<std::size_t> values) {
  if (values.empty()) throw InvalidArgument("median of an empty list");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

SsCvDesign ss_cv_design(const Matrix& x, const Vector& y, const SsCvOptions& opts) {
  check_problem(x, y);
  if (opts.k_max < 2) throw InvalidArgument("K_max must be at least 2");
  if (opts.repeats < 1) throw InvalidArgument("repeats must be at least 1");
  const auto m = static_cast<std::size_t>(x.rows());
  const auto n_p = static_cast<std::size_t>(x.cols());

  SsCvDesign out;
  for (std::size_t k = 2; k <= opts.k_max; ++k)
    for (std::size_t r = 0; r < opts.repeats; ++r) out.run_k.push_back(k);
  out.run_supports.assign(out.run_k.size(), 0);
  parallel_for(out.run_k.size(), opts.threads, [&](std::size_t i) {
    const std::size_t k = out.run_k[i];
    const std::size_t r = i % opts.repeats;
    const auto plan = make_folds(m, k, n_p, derive_seed(opts.seed, {k, r}));
    out.run_supports[i] = ss_cv_solve(x, y, plan, opts.subset).support;
  });

  std::vector<std::size_t> cards;
  out.frequency.assign(n_p, 0.0);
  for (auto s : out.run_supports) {
    cards.push_back(static_cast<std::size_t>(std::popcount(s)));
    for (auto j : mask_indices(s)) out.frequency[j] += 1.0;
  }
  for (auto& f : out.frequency) f /= static_cast<double>(out.run_supports.size());
  out.cardinality = lower_median(std::move(cards));

  IndexList order(n_p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return out.frequency[a] > out.frequency[b]; });
  Mask support(n_p, false);
  for (std::size_t i = 0; i < out.cardinality; ++i) support[order[i]] = true;
  out.model = out.cardinality == 0 ? fit_bias_only(x, y) : fit_fixed(x, y, support);
  out.model.method = "sscv";
  out.model.support = support;
  return out;
}

}  // namespace softsensor
