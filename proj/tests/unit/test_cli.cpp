#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "temp_dir.hpp"

using softsensor::testing::read_text;
using softsensor::testing::TempDir;
using softsensor::testing::write_text;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "softsensor");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = softsensor::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Synthesizes a plant into `dir`/plant and returns the dataset path.
fs::path make_plant(const TempDir& dir, std::size_t n = 4000) {
  write_text(dir / "plant.json", R"({"n": )" + std::to_string(n) +
                                     R"(, "output_dir": "plant", "seed": 3, "noise_sd": 0.05, "contamination": 0.02})");
  const auto r = run({"synth", "--config", (dir / "plant.json").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  return dir / "plant" / "dataset.csv";
}

std::string experiment(const std::string& methods, const std::string& extra = "") {
  return R"({"seed": 7, "output_dir": "out", "dataset": {"path": "plant/dataset.csv", "output": "y", "time": "t")" + extra +
         R"(}, "treatment": {"method": "mcd", "restarts": 5}, "methods": [)" + methods +
         R"(], "evaluation": {"repeats": 2, "split": "random"}})";
}

}  // namespace

TEST(Cli, SynthWritesDatasetAndTruth) {
  TempDir dir;
  const auto data = make_plant(dir, 400);
  EXPECT_TRUE(fs::exists(data));
  EXPECT_TRUE(fs::exists(dir / "plant" / "truth.csv"));
  EXPECT_EQ(read_text(data).substr(0, 8), "t,x1,x2,");
}

TEST(Cli, DesignWritesModelsAndTable) {
  TempDir dir;
  make_plant(dir);
  write_text(dir / "exp.json", experiment(R"("ols", "ss", "fixed:x1")"));
  const auto r = run({"design", "--config", (dir / "exp.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("RMSE"), std::string::npos);
  for (const char* f : {"model_ols.json", "model_ss-bic.json", "model_fixed_x1.json", "trace_ols.csv", "comparison.csv",
                        "comparison.txt"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  EXPECT_EQ(read_text(dir / "out" / "comparison.txt"), r.out);
}

TEST(Cli, DesignIsByteDeterministic) {
  TempDir dir;
  make_plant(dir);
  write_text(dir / "exp.json", experiment(R"("lasso", "sscv")"));
  ASSERT_EQ(run({"design", "--config", (dir / "exp.json").string(), "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(run({"design", "--config", (dir / "exp.json").string(), "--out", (dir / "b").string(), "--threads", "2"}).code,
            0);
  for (const char* f : {"model_lasso.json", "model_sscv.json", "comparison.csv", "trace_sscv.csv"})
    EXPECT_EQ(read_text(dir / "a" / f), read_text(dir / "b" / f)) << f;
}

TEST(Cli, PretreatFlagsOutliers) {
  TempDir dir;
  make_plant(dir, 2000);
  write_text(dir / "exp.json", experiment(R"("ols")"));
  const auto r = run({"pretreat", "--config", (dir / "exp.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("method mcd"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "out" / "cleaned.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "report_mcd.csv"));
}

TEST(Cli, PredictMatchesDesignedModel) {
  TempDir dir;
  const auto data = make_plant(dir, 1000);
  write_text(dir / "exp.json", experiment(R"("ols")"));
  ASSERT_EQ(run({"design", "--config", (dir / "exp.json").string()}).code, 0);
  const auto r = run({"predict", "--model", (dir / "out" / "model_ols.json").string(), "--data", data.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "row,prediction");
  std::size_t lines = 0;
  for (char c : r.out) lines += c == '\n';
  EXPECT_EQ(lines, 1001u);
  const auto w = run({"predict", "--model", (dir / "out" / "model_ols.json").string(), "--data", data.string(), "--out",
                      (dir / "pred" / "p.csv").string()});
  ASSERT_EQ(w.code, 0);
  EXPECT_EQ(read_text(dir / "pred" / "p.csv"), r.out);
}

TEST(Cli, BenchmarkSmoke) {
  TempDir dir;
  make_plant(dir, 5000);
  write_text(dir / "exp.json", experiment(R"("ols", "pls", "ss")"));
  const auto a = run({"benchmark", "--config", (dir / "exp.json").string(), "--out", (dir / "a").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("median RMSE"), std::string::npos);
  const auto runs = read_text(dir / "a" / "benchmark_runs.csv");
  std::size_t lines = 0;
  for (char c : runs) lines += c == '\n';
  EXPECT_EQ(lines, 1u + 2u * 3u);
  const auto b = run({"benchmark", "--config", (dir / "exp.json").string(), "--out", (dir / "b").string()});
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(runs, read_text(dir / "b" / "benchmark_runs.csv"));
  EXPECT_EQ(read_text(dir / "a" / "benchmark_summary.csv"), read_text(dir / "b" / "benchmark_summary.csv"));
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  make_plant(dir, 400);
  const auto cfg = (dir / "exp.json").string();

  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"design"}).code, 2);
  EXPECT_EQ(run({"design", "--config", (dir / "none.json").string()}).code, 2);

  write_text(dir / "exp.json", R"({"dataset": {"path": "missing.csv", "output": "y"}, "methods": ["ols"]})");
  EXPECT_EQ(run({"design", "--config", cfg}).code, 2);

  write_text(dir / "exp.json", experiment(R"("ridge")"));
  EXPECT_EQ(run({"design", "--config", cfg}).code, 2);

  write_text(dir / "exp.json", experiment(R"("ols")", R"(, "colour": 1)"));
  EXPECT_EQ(run({"design", "--config", cfg}).code, 2);

  write_text(dir / "exp.json", experiment(R"("ols")", R"(, "exclude": [[1, 400]])"));
  EXPECT_EQ(run({"design", "--config", cfg}).code, 3);

  write_text(dir / "exp.json", experiment(R"("ols")"));
  write_text(dir / "blocker", "x");
  const auto io = run({"design", "--config", cfg, "--out", (dir / "blocker" / "sub").string()});
  EXPECT_EQ(io.code, 4) << io.err;
  EXPECT_FALSE(io.err.empty());

  write_text(dir / "bad.json", R"({"n": 100, "contamination": 0.6})");
  EXPECT_EQ(run({"synth", "--config", (dir / "bad.json").string()}).code, 2);
  write_text(dir / "bad.json", R"({"n": 5})");
  EXPECT_EQ(run({"synth", "--config", (dir / "bad.json").string()}).code, 2);
  write_text(dir / "bad.json", "{not json");
  EXPECT_EQ(run({"synth", "--config", (dir / "bad.json").string()}).code, 2);

  EXPECT_EQ(run({"predict", "--model", (dir / "nope.json").string(), "--data", (dir / "plant" / "dataset.csv").string()}).code,
            2);
}

TEST(Cli, HelpSucceeds) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("design"), std::string::npos);
}
