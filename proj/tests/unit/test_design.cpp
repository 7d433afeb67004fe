#include <gtest/gtest.h>

#include <cmath>

#include "softsensor/design.hpp"
#include "softsensor/error.hpp"
#include "softsensor/random.hpp"
#include "softsensor/synth.hpp"

using namespace softsensor;

namespace {

Dataset plant(std::uint64_t seed, double noise = 0.05, std::size_t n = 4000) {
  PlantSpec s;
  s.noise_sd = noise;
  s.seed = seed;
  return generate(s, n).data;
}

std::vector<MethodSpec> methods(std::initializer_list<const char*> names) {
  std::vector<MethodSpec> out;
  for (auto n : names) out.push_back(parse_method(n));
  return out;
}

}  // namespace

TEST(Design, ParseMethod) {
  EXPECT_EQ(parse_method("ols").kind, MethodKind::ols);
  EXPECT_EQ(parse_method("pca").kind, MethodKind::pca);
  EXPECT_EQ(parse_method("pls").kind, MethodKind::pls);
  EXPECT_EQ(parse_method("lasso").kind, MethodKind::lasso);
  EXPECT_EQ(parse_method("sscv").kind, MethodKind::sscv);
  const auto ss = parse_method("ss");
  EXPECT_EQ(ss.kind, MethodKind::ss);
  EXPECT_EQ(ss.criterion, Criterion::bic);
  EXPECT_EQ(ss.label, "ss-bic");
  EXPECT_EQ(parse_method("ss-aicc").criterion, Criterion::aicc);
  EXPECT_EQ(parse_method("ss-r2adj").criterion, Criterion::r2adj);
  const auto f = parse_method("fixed:x1,x3");
  EXPECT_EQ(f.kind, MethodKind::fixed);
  EXPECT_EQ(f.fixed_inputs, (std::vector<std::string>{"x1", "x3"}));
  EXPECT_THROW(parse_method("ridge"), InvalidArgument);
  EXPECT_THROW(parse_method("fixed:"), InvalidArgument);
  EXPECT_THROW(parse_method("ss-foo"), InvalidArgument);
}

TEST(Design, PrepareSplitNormalizesTraining) {
  const auto d = plant(1);
  const auto plan = split(d, SplitKind::chronological, 0.5);
  const auto prep = prepare_split(d, plan, PipelineConfig{});
  ASSERT_EQ(prep.x_train.rows(), static_cast<Eigen::Index>(plan.train.size()));
  ASSERT_EQ(prep.raw_test.rows(), static_cast<Eigen::Index>(plan.test.size()));
  for (Eigen::Index j = 0; j < prep.x_train.cols(); ++j) EXPECT_NEAR(prep.x_train.col(j).mean(), 0.0, 1e-10);
  EXPECT_NEAR(prep.y_train.mean(), 0.0, 1e-10);
  for (std::size_t k = 0; k < plan.test.size(); ++k)
    EXPECT_EQ(prep.raw_y_test[static_cast<Eigen::Index>(k)], d.output[static_cast<Eigen::Index>(plan.test[k])]);
}

TEST(Design, DesignAllRecoversPlant) {
  const auto d = plant(2, 0.02);
  const auto plan = split(d, SplitKind::chronological, 0.5);
  PipelineConfig cfg;
  cfg.seed = 3;
  const auto runs = design_all(d, plan, methods({"ols", "pls", "ss", "fixed:x1"}), cfg);
  ASSERT_EQ(runs.size(), 4u);
  EXPECT_EQ(runs[2].model.method, "ss-bic");
  EXPECT_EQ(runs[2].model.selected_inputs(), (std::vector<std::string>{"x1", "x3", "x6", "x9"}));
  EXPECT_EQ(runs[2].report.inputs, 4u);
  EXPECT_EQ(runs[3].report.inputs, 1u);
  EXPECT_LT(runs[2].report.rmse, runs[3].report.rmse);
  EXPECT_LE(runs[2].report.rmse, runs[0].report.rmse * 1.05);
  EXPECT_EQ(runs[0].report.trace.size(), plan.test.size());
  const auto& ec = runs[2].model.engineering_coef();
  EXPECT_NEAR(ec[0], 1.5, 0.01);
  EXPECT_NEAR(ec[2], -0.8, 0.01);
}

TEST(Design, DesignAllIsDeterministic) {
  const auto d = plant(4);
  const auto plan = split(d, SplitKind::random, 0.5, 9);
  PipelineConfig cfg;
  cfg.seed = 5;
  const auto ms = methods({"lasso", "sscv"});
  const auto a = design_all(d, plan, ms, cfg);
  const auto b = design_all(d, plan, ms, cfg);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].report.rmse, b[i].report.rmse);
    EXPECT_TRUE(a[i].model.coef == b[i].model.coef);
  }
  EXPECT_EQ(comparison_table(a), comparison_table(b));
}

TEST(Design, FixedRejectsUnknownColumn) {
  const auto d = plant(6);
  const auto plan = split(d, SplitKind::chronological, 0.5);
  EXPECT_THROW(design_all(d, plan, methods({"fixed:nope"}), PipelineConfig{}), InvalidArgument);
  EXPECT_THROW(design_all(d, plan, {}, PipelineConfig{}), InvalidArgument);
}

TEST(Design, ComparisonTableLayout) {
  const auto d = plant(7);
  const auto plan = split(d, SplitKind::chronological, 0.5);
  const auto runs = design_all(d, plan, methods({"ols", "pca"}), PipelineConfig{});
  const auto table = comparison_table(runs);
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < table.size()) {
    const auto end = table.find('\n', pos);
    lines.push_back(table.substr(pos, end - pos));
    pos = end + 1;
  }
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[1].rfind("n_p*", 0), 0u);
  EXPECT_EQ(lines[2].rfind("RMSE", 0), 0u);
  EXPECT_EQ(lines[3].rfind("BC [%]", 0), 0u);
  for (const auto& l : lines) EXPECT_EQ(l.size(), lines[0].size());
  EXPECT_NE(lines[0].find("ols"), std::string::npos);
  EXPECT_NE(lines[1].find('('), std::string::npos);
}

TEST(Design, EvaluateReportsTrainingSigma) {
  const auto d = plant(8, 0.0);
  const auto plan = split(d, SplitKind::chronological, 0.5);
  PipelineConfig cfg;
  const auto prep = prepare_split(d, plan, cfg);
  const auto model = design_sensor(prep, parse_method("ols"), cfg, 1);
  const auto report = evaluate_sensor(model, prep, d, 1.0);
  EXPECT_LT(report.rmse, 1e-8);
  EXPECT_EQ(report.corrections, 0u);
  EXPECT_EQ(report.bc_percent, 0.0);
  EXPECT_EQ(report.trace.front().row, d.origin[plan.test.front()]);
}

TEST(Design, BenchmarkSingleRepeatMatchesDesignAll) {
  const auto d = plant(10);
  PipelineConfig cfg;
  cfg.seed = 11;
  const auto ms = methods({"ols", "ss"});
  const auto bench = benchmark(d, ms, SplitKind::random, 0.5, 1, cfg);
  const auto plan = split(d, SplitKind::random, 0.5, derive_seed(cfg.seed, {0xbe7, 0}));
  const auto runs = design_all(d, plan, ms, cfg, 0);
  ASSERT_EQ(bench.runs.size(), 1u);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    ASSERT_TRUE(bench.runs[0][i].ok);
    EXPECT_EQ(bench.runs[0][i].rmse, runs[i].report.rmse);
    EXPECT_EQ(bench.runs[0][i].inputs, runs[i].report.inputs);
    EXPECT_EQ(bench.runs[0][i].bc_percent, runs[i].report.bc_percent);
  }
}

TEST(Design, BenchmarkDeterministicAcrossThreads) {
  const auto d = plant(12, 0.05, 2000);
  PipelineConfig cfg;
  cfg.seed = 13;
  const auto ms = methods({"ols", "pls", "lasso"});
  const auto a = benchmark(d, ms, SplitKind::random, 0.5, 4, cfg);
  cfg.threads = 3;
  const auto b = benchmark(d, ms, SplitKind::random, 0.5, 4, cfg);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t i = 0; i < ms.size(); ++i) EXPECT_EQ(a.runs[r][i].rmse, b.runs[r][i].rmse);
}

TEST(Design, BenchmarkSummariesAndMissing) {
  const auto d = plant(14, 0.05, 2000);
  PipelineConfig cfg;
  cfg.seed = 15;
  const auto ms = methods({"ols", "fixed:x2", "fixed:nope"});
  const auto res = benchmark(d, ms, SplitKind::random, 0.5, 5, cfg);
  ASSERT_EQ(res.summary.size(), 3u);
  EXPECT_EQ(res.summary[0].rmse.count, 5u);
  EXPECT_EQ(res.summary[2].rmse.count, 0u);
  EXPECT_EQ(res.summary[2].rmse.missing, 5u);
  EXPECT_FALSE(res.runs[0][2].error.empty());
  // x2 carries no signal of its own, so a sensor built on it is worse than OLS.
  EXPECT_GT(res.summary[1].rmse.median, res.summary[0].rmse.median);
  const auto again = summarize(res.labels, res.runs);
  EXPECT_TRUE(std::isnan(res.summary[2].rmse.median));
  for (std::size_t m = 0; m < 2; ++m) {
    EXPECT_EQ(again[m].rmse.median, res.summary[m].rmse.median);
    EXPECT_EQ(again[m].inputs.mean, res.summary[m].inputs.mean);
  }
  std::vector<double> ols;
  for (const auto& row : res.runs) ols.push_back(row[0].rmse);
  EXPECT_EQ(box_stats(ols).median, res.summary[0].rmse.median);
  EXPECT_THROW(benchmark(d, ms, SplitKind::random, 0.5, 0, cfg), InvalidArgument);
}

TEST(Design, DetectOutliersOnPlant) {
  PlantSpec s;
  s.n_inputs = 5;
  s.support = {0, 1};
  s.coefficients = {1.0, 1.0};
  s.contamination = 0.1;
  s.seed = 16;
  const auto r = generate(s, 2000);
  TreatmentConfig tc;
  tc.restarts = 10;
  const auto report = detect_outliers(r.data, tc, 1);
  std::size_t hit = 0, outliers = 0;
  for (std::size_t i = 0; i < r.data.rows(); ++i) {
    outliers += r.truth.outlier[i];
    hit += r.truth.outlier[i] && !report.keep[i];
  }
  EXPECT_GE(static_cast<double>(hit), 0.95 * static_cast<double>(outliers));
}
