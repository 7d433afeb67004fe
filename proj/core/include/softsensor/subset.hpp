#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "softsensor/criteria.hpp"
#include "softsensor/regress.hpp"
#include "softsensor/types.hpp"

namespace softsensor {

/// Support sets are bit masks over at most 63 candidate columns.
using SupportMask = std::uint64_t;

IndexList mask_indices(SupportMask mask);
SupportMask indices_mask(const IndexList& indices);
Mask to_mask(SupportMask mask, std::size_t n_p);

/// Relative tolerance under which two objective values count as equal.
inline constexpr double kTieTolerance = 1e-9;

bool objectives_tie(double a, double b);

/// Strict preference between candidates: smaller objective, then (on a tie)
/// smaller cardinality, then the lexicographically smaller sorted index list.
bool better_candidate(double obj_a, SupportMask a, double obj_b, SupportMask b);

struct SubsetConfig {
  std::optional<double> big_m;        ///< defaults to 10 x max |full OLS coefficient|
  std::size_t exact_limit = 16;       ///< unbounded search up to this many columns
  std::size_t node_budget = 100000;   ///< node limit beyond exact_limit
  bool record_log = false;
};

struct SearchLog {
  struct Incumbent {
    std::size_t node;
    double objective;
    SupportMask support;
  };
  struct NodeEntry {
    std::size_t node;
    SupportMask included;
    SupportMask undecided;
    double bound;
  };
  std::size_t nodes = 0;
  std::size_t evaluations = 0;
  bool exact = true;
  std::vector<Incumbent> incumbents;
  std::vector<NodeEntry> trace;  ///< filled only with record_log

  void write(const std::filesystem::path& path) const;
};

struct SubsetResult {
  SensorModel model;
  SupportMask support = 0;
  double objective = 0.0;
  SearchLog log;
};

/// Criterion-driven best subset by branch-and-bound. Candidates include the
/// empty (bias-only) support.
SubsetResult best_subset(const Matrix& x, const Vector& y, Criterion kind, const SubsetConfig& cfg = {});

/// Partition of training positions 0..m-1 into K validation folds.
struct FoldPlan {
  std::size_t k = 0;
  std::vector<IndexList> folds;  ///< each sorted ascending

  IndexList training(std::size_t fold) const;
};

/// Seed-deterministic balanced folds; the first m mod K folds hold one extra
/// row. Throws InvalidArgument unless every training part keeps >= n_p rows.
FoldPlan make_folds(std::size_t m, std::size_t k, std::size_t n_p, std::uint64_t seed);

struct CvSolution {
  SupportMask support = 0;
  double objective = 0.0;  ///< summed squared validation error
  SearchLog log;
};

/// Support minimizing the summed validation error of per-fold least-squares
/// fits (with intercept). Nonempty supports only.
CvSolution ss_cv_solve(const Matrix& x, const Vector& y, const FoldPlan& plan, const SubsetConfig& cfg = {});

/// Summed validation error of one support under a fold plan.
double cv_objective(const Matrix& x, const Vector& y, const FoldPlan& plan, SupportMask support);

struct SsCvDesign {
  SensorModel model;
  std::vector<SupportMask> run_supports;  ///< per (K, repeat) run
  std::vector<std::size_t> run_k;
  std::vector<double> frequency;          ///< selection share per column
  std::size_t cardinality = 0;            ///< lower median of run cardinalities
};

struct SsCvOptions {
  std::size_t k_max = 6;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  SubsetConfig subset;
};

/// Lower median: element (size - 1) / 2 of the sorted values.
std::size_t lower_median(std::vector<std::size_t> values);

SsCvDesign ss_cv_design(const Matrix& x, const Vector& y, const SsCvOptions& opts);

}  // namespace softsensor
