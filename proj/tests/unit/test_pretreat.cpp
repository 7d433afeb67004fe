#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "softsensor/error.hpp"
#include "softsensor/linalg.hpp"
#include "softsensor/pretreat.hpp"

using namespace softsensor;

namespace {

Matrix gaussian(std::uint64_t seed, Eigen::Index n, Eigen::Index p) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = g(rng);
  return m;
}

Matrix column(std::vector<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

// Contaminated sample: the first `bad` rows are shifted by `shift` in every coordinate.
Matrix contaminated(std::uint64_t seed, Eigen::Index n, Eigen::Index p, Eigen::Index bad, double shift) {
  Matrix m = gaussian(seed, n, p);
  m.topRows(bad).array() += shift;
  return m;
}

}  // namespace

TEST(Covariance, TwoRowsHandValue) {
  auto c = covariance(column({1, -1}));
  EXPECT_DOUBLE_EQ(c.mean[0], 0.0);
  EXPECT_DOUBLE_EQ(c.cov(0, 0), 2.0);
  EXPECT_FALSE(c.singular);
}

TEST(Covariance, IdenticalRowsAreSingular) {
  Matrix m = Matrix::Ones(4, 2);
  auto c = covariance(m);
  EXPECT_EQ(c.cov.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(c.singular);
}

TEST(Covariance, StandardizedDataHasUnitDiagonal) {
  Matrix m = gaussian(1, 200, 4);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double mu = m.col(j).mean();
    const double sd = std::sqrt((m.col(j).array() - mu).square().sum() / 199.0);
    m.col(j) = (m.col(j).array() - mu) / sd;
  }
  auto c = covariance(m);
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(c.cov(j, j), 1.0, 1e-10);
}

TEST(Covariance, SymmetricPositiveSemidefinite) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto c = covariance(gaussian(s, 30, 6));
    EXPECT_EQ(c.cov, c.cov.transpose());
    EXPECT_GT(eigh(c.cov).values.minCoeff(), -1e-10);
  }
}

TEST(Covariance, TooFewRows) {
  EXPECT_THROW(covariance(gaussian(1, 2, 2)), InvalidArgument);
}

TEST(T2, Distances) {
  CovarianceModel model{Vector::Zero(2), Matrix::Identity(2, 2), 10, false};
  Matrix m(2, 2);
  m << 3, 4,
       0, 0;
  auto d = t2_distances(m, model);
  EXPECT_NEAR(d[0], 25.0, 1e-12);
  EXPECT_EQ(d[1], 0.0);
  Matrix data = gaussian(3, 100, 3);
  auto fitted = covariance(data);
  EXPECT_GE(t2_distances(data, fitted).minCoeff(), 0.0);
}

TEST(T2, SingularCovarianceRejected) {
  Matrix m = gaussian(3, 50, 2);
  m.col(1) = 2.0 * m.col(0);
  EXPECT_THROW(t2_distances(m, covariance(m)), DataError);
}

TEST(T2, ChiSquareCutoff) {
  EXPECT_NEAR(chi2_quantile(2, 0.997), -2.0 * std::log(0.003), 1e-9);
  auto r = t2_detect(gaussian(1, 50, 2), 0.997);
  EXPECT_NEAR(r.cutoff, 11.6183, 1e-3);
  EXPECT_THROW(t2_detect(gaussian(1, 50, 2), 1.0), InvalidArgument);
}

TEST(T2, FlaggedFractionMatchesConfidence) {
  auto r = t2_detect(gaussian(7, 100000, 5), 0.997);
  const double frac = static_cast<double>(r.flagged()) / 100000.0;
  EXPECT_NEAR(frac, 0.003, 0.002);
}

TEST(T2, KeepMaskFollowsCutoff) {
  auto r = t2_detect(contaminated(2, 300, 3, 10, 6.0), 0.99);
  ASSERT_EQ(r.keep.size(), 300u);
  for (std::size_t i = 0; i < 300; ++i) EXPECT_EQ(r.keep[i], r.distance[static_cast<Eigen::Index>(i)] <= r.cutoff);
}

TEST(T2, PermutationEquivariant) {
  Matrix m = contaminated(4, 200, 3, 8, 5.0);
  std::vector<Eigen::Index> perm(200);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(5);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix pm(200, 3);
  for (Eigen::Index i = 0; i < 200; ++i) pm.row(i) = m.row(perm[static_cast<std::size_t>(i)]);
  auto a = t2_detect(m, 0.997);
  auto b = t2_detect(pm, 0.997);
  for (Eigen::Index i = 0; i < 200; ++i) {
    EXPECT_EQ(b.keep[static_cast<std::size_t>(i)], a.keep[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
  }
}

TEST(DefaultH, Examples) {
  EXPECT_EQ(default_h(100, 10), 78u);
  EXPECT_EQ(default_h(10, 1), 8u);
  EXPECT_THROW(default_h(5, 5), InvalidArgument);
}

TEST(McdCutoff, FrozenReferenceValues) {
  // Reference values from an independent scipy evaluation of the asymptotic
  // variance, itself checked against Monte-Carlo MCD fits.
  EXPECT_NEAR(mcd_consistency_factor(5000, 5, 3752), 1.4114151054767845, 1e-9);
  EXPECT_NEAR(mcd_degrees_of_freedom(5000, 5, 3752), 1883.1979406927592, 1e-6);
  EXPECT_NEAR(mcd_cutoff(5000, 5, 3752, 0.997, CutoffFamily::f_approximation), 5.049842762071506, 1e-9);
  EXPECT_NEAR(mcd_degrees_of_freedom(1000, 5, 503), 158.6820795984655, 1e-7);
  EXPECT_NEAR(mcd_cutoff(1000, 5, 503, 0.975, CutoffFamily::f_approximation), 5.087595433756249, 1e-9);
  EXPECT_NEAR(mcd_degrees_of_freedom(32000, 11, 24000), 12868.041053832829, 1e-5);
  EXPECT_NEAR(mcd_cutoff(32000, 11, 24000, 0.997, CutoffFamily::f_approximation), 5.919979031184142, 1e-9);
  EXPECT_EQ(mcd_degrees_of_freedom(100, 3, 100), 99.0);
}

TEST(McdCutoff, ChiSquareFamily) {
  const double c = mcd_consistency_factor(1000, 5, 750);
  EXPECT_NEAR(mcd_cutoff(1000, 5, 750, 0.997, CutoffFamily::chi_square), std::sqrt(c * chi2_quantile(5, 0.997)), 1e-12);
  EXPECT_THROW(mcd_cutoff(1000, 5, 750, 0.0, CutoffFamily::chi_square), InvalidArgument);
}

TEST(Mcd, OneDimensionalOutlier) {
  McdConfig cfg;
  cfg.h = 4;
  cfg.restarts = 20;
  auto r = mcd_fit(column({0.0, 0.1, 0.2, 0.3, 100.0}), cfg);
  EXPECT_EQ(r.subset, (IndexList{0, 1, 2, 3}));
  EXPECT_GT(r.report.distance[4], r.report.cutoff);
  EXPECT_FALSE(r.report.keep[4]);
}

TEST(Mcd, FullSubsetEqualsCovariance) {
  Matrix m = gaussian(9, 60, 3);
  McdConfig cfg;
  cfg.h = 60;
  cfg.restarts = 3;
  auto r = mcd_fit(m, cfg);
  auto c = covariance(m);
  EXPECT_EQ(r.model.mean, c.mean);
  EXPECT_EQ(r.model.cov, c.cov);
}

TEST(Mcd, CStepsNeverIncreaseTheDeterminant) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    McdConfig cfg;
    cfg.restarts = 30;
    cfg.seed = s;
    auto r = mcd_fit(contaminated(s, 300, 4, 30, 4.0), cfg);
    EXPECT_EQ(r.report.monotonicity_violations, 0u);
    for (std::size_t k = 1; k < r.report.history.size(); ++k) EXPECT_LE(r.report.history[k], r.report.history[k - 1]);
  }
}

TEST(Mcd, WinningSubsetHoldsTheSmallestDistances) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    McdConfig cfg;
    cfg.restarts = 20;
    cfg.seed = s;
    Matrix m = contaminated(s + 100, 200, 3, 20, 5.0);
    auto r = mcd_fit(m, cfg);
    ASSERT_EQ(r.subset.size(), r.report.h);
    std::vector<bool> in(200, false);
    double inside = 0.0, outside = std::numeric_limits<double>::infinity();
    for (auto i : r.subset) {
      in[i] = true;
      inside = std::max(inside, r.report.distance[static_cast<Eigen::Index>(i)]);
    }
    for (std::size_t i = 0; i < 200; ++i)
      if (!in[i]) outside = std::min(outside, r.report.distance[static_cast<Eigen::Index>(i)]);
    EXPECT_LE(inside, outside + 1e-9);
    for (std::size_t i = 0; i < 200; ++i)
      EXPECT_EQ(r.report.keep[i], r.report.distance[static_cast<Eigen::Index>(i)] <= r.report.cutoff);
    EXPECT_GE(r.report.membership.minCoeff(), 0.0);
    EXPECT_LE(r.report.membership.maxCoeff(), 1.0);
  }
}

TEST(Mcd, DeterministicAcrossThreadCounts) {
  Matrix m = contaminated(3, 400, 3, 40, 5.0);
  McdConfig cfg;
  cfg.restarts = 16;
  cfg.seed = 77;
  auto a = mcd_fit(m, cfg);
  cfg.threads = 4;
  auto b = mcd_fit(m, cfg);
  EXPECT_EQ(a.subset, b.subset);
  EXPECT_EQ(a.report.distance, b.report.distance);
  EXPECT_EQ(a.report.membership, b.report.membership);
}

TEST(Mcd, FindsPlantedOutliers) {
  McdConfig cfg;
  cfg.restarts = 20;
  auto r = mcd_fit(contaminated(5, 1000, 4, 100, 8.0), cfg);
  std::size_t caught = 0;
  for (std::size_t i = 0; i < 100; ++i) caught += !r.report.keep[i];
  EXPECT_GE(caught, 95u);
}

TEST(Mcd, Rejections) {
  McdConfig cfg;
  cfg.h = 2;
  EXPECT_THROW(mcd_fit(gaussian(1, 20, 2), cfg), InvalidArgument);
  cfg.h.reset();
  cfg.restarts = 0;
  EXPECT_THROW(mcd_fit(gaussian(1, 20, 2), cfg), InvalidArgument);
  cfg.restarts = 5;
  EXPECT_THROW(mcd_fit(gaussian(1, 2, 2), cfg), InvalidArgument);
}

TEST(KMeans, TwoClustersOnALine) {
  KMeansOptions o;
  o.restarts = 10;
  auto m = kmeans_fit(column({0, 1, 10, 11}), 2, o);
  EXPECT_EQ(m.assignment[0], m.assignment[1]);
  EXPECT_EQ(m.assignment[2], m.assignment[3]);
  EXPECT_NE(m.assignment[0], m.assignment[2]);
  std::vector<double> centers{m.centers(0, 0), m.centers(1, 0)};
  std::sort(centers.begin(), centers.end());
  EXPECT_NEAR(centers[0], 0.5, 1e-12);
  EXPECT_NEAR(centers[1], 10.5, 1e-12);
  EXPECT_NEAR(m.inertia, 1.0, 1e-12);
}

TEST(KMeans, SingleClusterIsTheMean) {
  Matrix d = gaussian(2, 50, 3);
  KMeansOptions o;
  o.restarts = 3;
  auto m = kmeans_fit(d, 1, o);
  const Vector mu = d.colwise().mean().transpose();
  EXPECT_LT((m.centers.row(0).transpose() - mu).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(m.inertia, (d.rowwise() - mu.transpose()).squaredNorm(), 1e-9);
}

TEST(KMeans, EveryPointItsOwnCenter) {
  KMeansOptions o;
  o.restarts = 3;
  auto m = kmeans_fit(gaussian(3, 12, 2), 12, o);
  EXPECT_NEAR(m.inertia, 0.0, 1e-12);
}

TEST(KMeans, InertiaInvariants) {
  Matrix d = gaussian(4, 300, 2);
  d.topRows(100).array() += 6.0;
  KMeansOptions o;
  o.restarts = 25;
  o.seed = 8;
  auto m = kmeans_fit(d, 4, o);
  EXPECT_EQ(m.monotonicity_violations, 0u);
  for (const auto& trace : m.inertia_trace)
    for (std::size_t k = 1; k < trace.size(); ++k) EXPECT_LE(trace[k], trace[k - 1] * (1 + 1e-12));
  double total = 0.0;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const auto c = m.assignment[static_cast<std::size_t>(i)];
    ASSERT_LT(c, 4u);
    total += (d.row(i) - m.centers.row(static_cast<Eigen::Index>(c))).squaredNorm();
  }
  EXPECT_NEAR(m.inertia, total, 1e-9 * total);
  EXPECT_NEAR(m.distance.sum(), total, 1e-9 * total);
}

TEST(KMeans, Rejections) {
  KMeansOptions o;
  EXPECT_THROW(kmeans_fit(Matrix::Ones(5, 2), 2, o), DataError);
  EXPECT_THROW(kmeans_fit(gaussian(1, 5, 2), 6, o), InvalidArgument);
  EXPECT_THROW(kmeans_fit(gaussian(1, 5, 2), 0, o), InvalidArgument);
}

TEST(Elbow, ThreeSeparatedClusters) {
  int hits = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    Matrix d = gaussian(s, 300, 2);
    d.block(100, 0, 100, 1).array() += 10.0;
    d.block(200, 1, 100, 1).array() += 10.0;
    KMeansOptions o;
    o.restarts = 10;
    o.seed = s;
    auto e = elbow_select_k(d, 8, o);
    ASSERT_EQ(e.inertia.size(), 8u);
    hits += e.k == 3;
  }
  EXPECT_GE(hits, 9);
}

TEST(Elbow, TightSingleClusterIsWeak) {
  KMeansOptions o;
  o.restarts = 5;
  auto e = elbow_select_k(gaussian(6, 200, 2) * 0.01, 8, o);
  EXPECT_EQ(e.k, 2u);
  EXPECT_TRUE(e.weak);
}

TEST(Elbow, NeedsTwoCandidates) {
  KMeansOptions o;
  EXPECT_THROW(elbow_select_k(gaussian(6, 20, 2), 1, o), InvalidArgument);
}

TEST(KMeansDetect, SmallClusterFlagged) {
  Matrix d = gaussian(5, 1000, 2) * 0.5;
  d.block(900, 0, 95, 1).array() += 20.0;
  d.block(995, 1, 5, 1).array() += 20.0;
  KMeansOptions o;
  o.restarts = 20;
  auto m = kmeans_fit(d, 3, o);
  auto sizes = m.cluster_sizes();
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{5, 95, 900}));
  auto r = kmeans_detect(m, 0.02);
  EXPECT_EQ(r.flagged(), 5u);
  for (std::size_t i = 995; i < 1000; ++i) EXPECT_FALSE(r.keep[i]);
  EXPECT_TRUE(std::isnan(r.cutoff));
  EXPECT_EQ(kmeans_detect(m, 0.0005).flagged(), 0u);
  EXPECT_EQ(kmeans_detect(kmeans_fit(d, 1, o), 0.02).flagged(), 0u);
  EXPECT_THROW(kmeans_detect(m, 1.0), InvalidArgument);
}
