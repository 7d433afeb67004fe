#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "softsensor/types.hpp"

namespace softsensor {

/// Location and columnwise scatter of a set of rows.
struct CovarianceModel {
  Vector mean;
  Matrix cov;
  std::size_t count = 0;
  bool singular = false;  ///< condition number >= 1e12 or nonpositive eigenvalue
};

enum class DetectorKind { t2, mcd, kmeans };
std::string to_string(DetectorKind kind);
DetectorKind parse_detector_kind(const std::string& name);

/// Per-row distances and the keep/drop decision of one detector.
///
/// For t2 the distances are squared Mahalanobis distances; for mcd they are
/// (unsquared) robust distances; for kmeans they are squared distances to
/// the row's consensus cluster center and `cutoff` is NaN.
struct OutlierReport {
  DetectorKind method = DetectorKind::t2;
  Vector distance;
  double cutoff = 0.0;
  Mask keep;

  std::size_t restarts = 0;
  std::size_t h = 0;                       ///< mcd subset size
  std::size_t k = 0;                       ///< kmeans cluster count
  std::vector<double> history;             ///< mcd: winning det trace; kmeans: inertia per k
  Vector membership;                       ///< mcd: share of restarts whose final subset held the row
  std::size_t monotonicity_violations = 0; ///< C-step / Lloyd steps that increased the objective
  std::vector<std::string> notes;

  std::size_t flagged() const;
  IndexList kept_rows() const;
};

void write_report_csv(const OutlierReport& report, const std::filesystem::path& path,
                      std::span<const std::size_t> origin = {});

CovarianceModel covariance(const Matrix& data, std::span<const std::size_t> rows);
CovarianceModel covariance(const Matrix& data);

/// Squared Mahalanobis distance of every row; throws DataError when the
/// covariance is too ill-conditioned to invert.
Vector t2_distances(const Matrix& data, const CovarianceModel& model);

/// Hotelling T^2 screen with a chi-square(n_p) cutoff at `confidence`.
OutlierReport t2_detect(const Matrix& data, double confidence);

double chi2_quantile(double dof, double probability);

// Minimum covariance determinant ---------------------------------------------

enum class CutoffFamily { f_approximation, chi_square };

struct McdConfig {
  std::optional<std::size_t> h;  ///< defaults to default_h(n, n_p)
  std::size_t restarts = 100;
  std::size_t max_csteps = 200;
  double confidence = 0.997;
  CutoffFamily cutoff = CutoffFamily::f_approximation;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Midpoint of the admissible interval ceil((n + n_p + 1) / 2) <= h <= n,
/// rounded half up.
std::size_t default_h(std::size_t n, std::size_t n_p);

/// Consistency factor c_alpha = alpha / P(chi2_{p+2} <= chi2_{p,alpha}), alpha = h/n.
double mcd_consistency_factor(std::size_t n, std::size_t n_p, std::size_t h);

/// Wishart degrees of freedom matched to the asymptotic variance of the
/// consistency-corrected MCD scatter, with the Hardin-Rocke small-sample
/// adjustment exp(0.725 - 0.00663 p - 0.0780 ln n).
double mcd_degrees_of_freedom(std::size_t n, std::size_t n_p, std::size_t h);

/// Cutoff on unsquared raw MCD distances.
double mcd_cutoff(std::size_t n, std::size_t n_p, std::size_t h, double confidence, CutoffFamily family);

struct McdResult {
  CovarianceModel model;
  OutlierReport report;
  IndexList subset;  ///< winning h-subset, ascending
};

McdResult mcd_fit(const Matrix& data, const McdConfig& cfg);

// k-means ---------------------------------------------------------------------

struct KMeansModel {
  std::size_t k = 0;
  Matrix centers;               ///< k x n_p, from the best-inertia restart
  std::vector<std::size_t> assignment;  ///< consensus labels in [0, k)
  double inertia = 0.0;         ///< sum of squared distances under `assignment`
  double best_restart_inertia = 0.0;
  std::vector<double> restart_inertia;
  Vector distance;              ///< squared distance of each row to its consensus center
  Vector consensus_frequency;   ///< share of restarts agreeing with the consensus label
  std::size_t monotonicity_violations = 0;
  std::vector<std::vector<double>> inertia_trace;  ///< per restart, per Lloyd iteration

  std::vector<std::size_t> cluster_sizes() const;
};

struct KMeansOptions {
  std::size_t restarts = 100;
  std::size_t max_iterations = 300;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

KMeansModel kmeans_fit(const Matrix& data, std::size_t k, const KMeansOptions& opts);

struct ElbowResult {
  std::size_t k = 0;
  std::vector<double> inertia;  ///< best restart inertia for k = 1..k_max
  bool weak = false;
};

/// Elbow of the inertia curve: the k farthest from the chord joining the
/// k = 1 and k = k_max points. Falls back to k = 2 with `weak` set when the
/// elbow clustering still leaves more than 20 % of the total scatter.
ElbowResult elbow_select_k(const Matrix& data, std::size_t k_max, const KMeansOptions& opts);

/// Flags rows whose consensus cluster holds fewer than min_cluster_fraction * n rows.
OutlierReport kmeans_detect(const KMeansModel& model, double min_cluster_fraction);

}  // namespace softsensor
