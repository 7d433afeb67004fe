#include "softsensor/design.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "softsensor/error.hpp"
#include "softsensor/parallel.hpp"
#include "softsensor/random.hpp"

namespace softsensor {

namespace {

Matrix gather_rows(const Matrix& m, const IndexList& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Vector gather(const Vector& v, const IndexList& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(rows[i])];
  return out;
}

Matrix standardize_columns(const Dataset& data) {
  const Matrix& x = data.inputs;
  if (x.rows() < 2) throw DataError("outlier detection needs at least two rows");
  const Vector mean = x.colwise().mean().transpose();
  Matrix centered = x.rowwise() - mean.transpose();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double sd = std::sqrt(centered.col(j).squaredNorm() / static_cast<double>(x.rows() - 1));
    if (!(sd > 0.0)) throw DataError("constant column '" + data.columns[static_cast<std::size_t>(j)] + "'");
    centered.col(j) /= sd;
  }
  return centered;
}

std::string fixed_cell(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

OutlierReport detect_outliers(const Dataset& data, const TreatmentConfig& cfg, std::uint64_t seed, unsigned threads) {
  const Matrix xn = standardize_columns(data);
  switch (cfg.method) {
    case DetectorKind::t2: return t2_detect(xn, cfg.confidence);
    case DetectorKind::mcd: {
      McdConfig mc;
      mc.h = cfg.h;
      mc.restarts = cfg.restarts;
      mc.confidence = cfg.confidence;
      mc.cutoff = cfg.cutoff;
      mc.seed = seed;
      mc.threads = threads;
      return mcd_fit(xn, mc).report;
    }
    case DetectorKind::kmeans: {
      KMeansOptions ko;
      ko.restarts = cfg.restarts;
      ko.seed = seed;
      ko.threads = threads;
      std::size_t k = cfg.k;
      ElbowResult elbow;
      if (k == 0) {
        elbow = elbow_select_k(xn, cfg.k_max, ko);
        k = elbow.k;
      }
      auto report = kmeans_detect(kmeans_fit(xn, k, ko), cfg.min_cluster_fraction);
      report.history = elbow.inertia;
      if (elbow.weak) report.notes.push_back("weak elbow: inertia curve has no clear knee; using k=2");
      return report;
    }
  }
  throw InvalidArgument("unknown treatment method");
}

MethodSpec parse_method(const std::string& text) {
  MethodSpec m;
  m.label = text;
  if (text == "ols") m.kind = MethodKind::ols;
  else if (text == "pca") m.kind = MethodKind::pca;
  else if (text == "pls") m.kind = MethodKind::pls;
  else if (text == "lasso") m.kind = MethodKind::lasso;
  else if (text == "sscv") m.kind = MethodKind::sscv;
  else if (text == "ss") {
    m.kind = MethodKind::ss;
    m.label = "ss-bic";
  } else if (text.rfind("ss-", 0) == 0) {
    m.kind = MethodKind::ss;
    m.criterion = parse_criterion(text.substr(3));
  } else if (text.rfind("fixed:", 0) == 0) {
    m.kind = MethodKind::fixed;
    std::stringstream ss(text.substr(6));
    std::string col;
    while (std::getline(ss, col, ','))
      if (!col.empty()) m.fixed_inputs.push_back(col);
    if (m.fixed_inputs.empty()) throw InvalidArgument("fixed method needs at least one input column");
  } else {
    throw InvalidArgument("unknown design method '" + text + "'");
  }
  return m;
}

PreparedSplit prepare_split(const Dataset& data, const SplitPlan& plan, const PipelineConfig& cfg) {
  PreparedSplit p;
  p.train = plan.train;
  p.test = plan.test;
  if (cfg.scaler_on_all_rows) {
    IndexList all(data.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    p.scaler = fit_scaler(data, all, cfg.scaler);
  } else {
    p.scaler = fit_scaler(data, plan.train, cfg.scaler);
  }
  p.raw_train = gather_rows(data.inputs, plan.train);
  p.raw_y_train = gather(data.output, plan.train);
  p.raw_test = gather_rows(data.inputs, plan.test);
  p.raw_y_test = gather(data.output, plan.test);
  p.x_train = p.scaler.apply_inputs(p.raw_train);
  p.y_train = (p.raw_y_train.array() - p.scaler.output_offset) / p.scaler.output_scale;
  return p;
}

SensorModel design_sensor(const PreparedSplit& prep, const MethodSpec& method, const PipelineConfig& cfg,
                          std::uint64_t seed) {
  const Matrix& x = prep.x_train;
  const Vector& y = prep.y_train;
  SensorModel model;
  switch (method.kind) {
    case MethodKind::ols: model = fit_ols(x, y); break;
    case MethodKind::pca: model = fit_pca_regression(x, y, method.latent); break;
    case MethodKind::pls: model = fit_pls(x, y, method.latent); break;
    case MethodKind::lasso: {
      const auto tuning = tune_lambda(x, y, method.lasso_criteria, method.lasso_cv_repeats, seed, 1);
      LassoConfig lc;
      lc.lambda = tuning.lambda;
      model = fit_lasso(x, y, lc);
      model.notes.push_back("lambda " + format_double(tuning.lambda));
      break;
    }
    case MethodKind::ss: model = best_subset(x, y, method.criterion, method.subset).model; break;
    case MethodKind::sscv: {
      SsCvOptions so;
      so.k_max = method.k_max;
      so.repeats = method.cv_repeats;
      so.seed = seed;
      so.subset = method.subset;
      model = ss_cv_design(x, y, so).model;
      break;
    }
    case MethodKind::fixed: {
      Mask support(static_cast<std::size_t>(x.cols()), false);
      for (const auto& name : method.fixed_inputs) {
        const auto it = std::find(prep.scaler.columns.begin(), prep.scaler.columns.end(), name);
        if (it == prep.scaler.columns.end()) throw InvalidArgument("fixed input '" + name + "' is not a dataset column");
        support[static_cast<std::size_t>(it - prep.scaler.columns.begin())] = true;
      }
      model = fit_fixed(x, y, support);
      break;
    }
  }
  if (method.kind != MethodKind::fixed) model = prune_impacts(model, x, y, cfg.prune_threshold);
  model.method = method.label;
  attach_scaler(model, prep.scaler);
  return model;
}

EvalReport evaluate_sensor(const SensorModel& model, const PreparedSplit& prep, const Dataset& data, double theta) {
  const Vector train_res = model.predict(prep.raw_train) - prep.raw_y_train;
  BiasPolicy policy;
  policy.theta = theta;
  if (train_res.size() > 1) {
    const double mean = train_res.mean();
    policy.sigma_train = std::sqrt((train_res.array() - mean).square().sum() / static_cast<double>(train_res.size() - 1));
  }
  policy.floor = 1e-9 * (1.0 + prep.raw_y_train.cwiseAbs().maxCoeff());

  auto report = simulate_bias_correction(prep.raw_y_test, model.predict(prep.raw_test), policy, model.scaler.output_scale);
  for (std::size_t i = 0; i < prep.test.size(); ++i) {
    report.trace[i].row = data.origin[prep.test[i]];
    report.trace[i].time = data.time[prep.test[i]];
  }
  report.inputs = model.complexity();
  report.latent = model.latent;
  return report;
}

std::vector<DesignRun> design_all(const Dataset& data, const SplitPlan& plan, const std::vector<MethodSpec>& methods,
                                  const PipelineConfig& cfg, std::size_t repeat) {
  if (methods.empty()) throw InvalidArgument("no design methods requested");
  const auto prep = prepare_split(data, plan, cfg);
  std::vector<DesignRun> runs;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    DesignRun run;
    run.method = methods[i];
    run.model = design_sensor(prep, methods[i], cfg, derive_seed(cfg.seed, {0xde5, repeat, i}));
    run.report = evaluate_sensor(run.model, prep, data, cfg.theta);
    runs.push_back(std::move(run));
  }
  return runs;
}

std::string comparison_table(const std::vector<DesignRun>& runs) {
  std::vector<std::vector<std::string>> cells{{""}, {"n_p*"}, {"RMSE"}, {"BC [%]"}};
  for (const auto& r : runs) {
    cells[0].push_back(r.model.method);
    std::string np = std::to_string(r.report.inputs);
    if (r.model.latent_model) np += " (" + std::to_string(r.report.latent) + ")";
    cells[1].push_back(np);
    cells[2].push_back(fixed_cell(r.report.rmse, 4));
    cells[3].push_back(fixed_cell(r.report.bc_percent, 1));
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        out += row[c] + std::string(width[c] - row[c].size(), ' ');
      } else {
        out += "  " + std::string(width[c] - row[c].size(), ' ') + row[c];
      }
    }
    out += '\n';
  }
  return out;
}

std::vector<MethodSummary> summarize(const std::vector<std::string>& labels,
                                     const std::vector<std::vector<RepeatMetrics>>& runs) {
  std::vector<MethodSummary> out;
  for (std::size_t m = 0; m < labels.size(); ++m) {
    std::vector<double> rmse, inputs, bc;
    std::size_t missing = 0;
    for (const auto& rep : runs) {
      if (!rep[m].ok) {
        ++missing;
        continue;
      }
      rmse.push_back(rep[m].rmse);
      inputs.push_back(static_cast<double>(rep[m].inputs));
      bc.push_back(rep[m].bc_percent);
    }
    out.push_back({labels[m], box_stats(rmse, missing), box_stats(inputs, missing), box_stats(bc, missing)});
  }
  return out;
}

BenchmarkResult benchmark(const Dataset& data, const std::vector<MethodSpec>& methods, SplitKind kind,
                          double fraction, std::size_t repeats, const PipelineConfig& cfg) {
  if (methods.empty()) throw InvalidArgument("no design methods requested");
  if (repeats < 1) throw InvalidArgument("benchmark needs at least one repeat");
  BenchmarkResult res;
  for (const auto& m : methods) res.labels.push_back(m.label);
  res.runs.assign(repeats, std::vector<RepeatMetrics>(methods.size()));

  parallel_for(repeats, cfg.threads, [&](std::size_t r) {
    auto& row = res.runs[r];
    PreparedSplit prep;
    try {
      const auto plan = split(data, kind, fraction, derive_seed(cfg.seed, {0xbe7, r}));
      prep = prepare_split(data, plan, cfg);
    } catch (const std::exception& e) {
      for (auto& cell : row) cell.error = e.what();
      return;
    }
    for (std::size_t i = 0; i < methods.size(); ++i) {
      try {
        const auto model = design_sensor(prep, methods[i], cfg, derive_seed(cfg.seed, {0xde5, r, i}));
        const auto report = evaluate_sensor(model, prep, data, cfg.theta);
        row[i] = {true, report.rmse, report.inputs, report.latent, report.bc_percent, {}};
      } catch (const std::exception& e) {
        row[i].ok = false;
        row[i].error = e.what();
      }
    }
  });
  res.summary = summarize(res.labels, res.runs);
  return res;
}

}  // namespace softsensor
