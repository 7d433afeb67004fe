#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "model_io.hpp"
#include "softsensor/design.hpp"
#include "softsensor/error.hpp"
#include "softsensor/random.hpp"
#include "softsensor/synth.hpp"

namespace softsensor::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out;
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  return f;
}

void finish(std::ofstream& f, const fs::path& path) {
  f.flush();
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::string file_label(std::string label) {
  for (auto& c : label)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return label;
}

std::string num(double v) { return format_double(v); }

ExperimentConfig experiment(const CommonOptions& o) {
  if (o.config.empty()) throw ConfigError("--config: a configuration file is required");
  auto cfg = load_experiment(o.config);
  if (o.seed) cfg.seed = *o.seed;
  cfg.pipeline.seed = cfg.seed;
  cfg.pipeline.threads = o.threads;
  if (!o.out.empty()) cfg.output_dir = o.out;
  return cfg;
}

// Load, derive features and drop excluded ranges.
Dataset load_dataset(const ExperimentConfig& cfg) {
  auto data = load_csv(cfg.dataset.path, cfg.dataset.output, cfg.dataset.time, cfg.dataset.inputs);
  if (!cfg.dataset.features.empty()) data = derive_features(data, cfg.dataset.features);
  if (!cfg.dataset.exclude.empty()) data = exclude_ranges(data, cfg.dataset.exclude);
  return data;
}

Dataset treat(const Dataset& data, const ExperimentConfig& cfg, std::optional<OutlierReport>& report) {
  if (!cfg.treatment) return data;
  report = detect_outliers(data, *cfg.treatment, derive_seed(cfg.seed, {0x7ea7}), cfg.pipeline.threads);
  const auto kept = report->kept_rows();
  if (kept.empty()) throw DataError("empty dataset: every row was flagged as an outlier");
  return select_rows(data, kept);
}

std::string time_name(const ExperimentConfig& cfg) { return cfg.dataset.time.value_or("t"); }

int cmd_pretreat(const CommonOptions& o, std::ostream& out) {
  const auto cfg = experiment(o);
  const auto data = load_dataset(cfg);
  std::optional<OutlierReport> report;
  const auto cleaned = treat(data, cfg, report);
  const auto dir = prepare_dir(cfg.output_dir);

  write_csv(cleaned, dir / "cleaned.csv", time_name(cfg));
  std::ostringstream summary;
  summary << "rows_loaded " << data.rows() << '\n' << "rows_kept " << cleaned.rows() << '\n';
  if (report) {
    write_report_csv(*report, dir / ("report_" + to_string(report->method) + ".csv"), data.origin);
    summary << "method " << to_string(report->method) << '\n'
            << "flagged " << report->flagged() << '\n'
            << "cutoff " << num(report->cutoff) << '\n';
    if (report->method == DetectorKind::mcd) summary << "h " << report->h << '\n';
    if (report->method == DetectorKind::kmeans) summary << "k " << report->k << '\n';
    summary << "restarts " << report->restarts << '\n'
            << "monotonicity_violations " << report->monotonicity_violations << '\n';
    for (const auto& note : report->notes) summary << "note " << note << '\n';
  } else {
    summary << "method none\n";
  }
  auto f = open_output(dir / "pretreat_summary.txt");
  f << summary.str();
  finish(f, dir / "pretreat_summary.txt");
  out << summary.str();
  return kOk;
}

int cmd_design(const CommonOptions& o, std::ostream& out) {
  const auto cfg = experiment(o);
  std::optional<OutlierReport> report;
  const auto data = treat(load_dataset(cfg), cfg, report);
  const auto plan = split(data, cfg.split_kind, cfg.split_fraction, derive_seed(cfg.seed, {0x5e1}));
  const auto runs = design_all(data, plan, cfg.methods, cfg.pipeline);
  const auto dir = prepare_dir(cfg.output_dir);

  for (const auto& r : runs) {
    const auto label = file_label(r.model.method);
    write_model({r.model, data.output_name, cfg.dataset.features}, dir / ("model_" + label + ".json"));
    write_trace_csv(r.report, dir / ("trace_" + label + ".csv"));
    if (cfg.search_log && r.method.kind == MethodKind::ss) {
      const auto prep = prepare_split(data, plan, cfg.pipeline);
      best_subset(prep.x_train, prep.y_train, r.method.criterion, r.method.subset).log.write(dir / ("search_" + label + ".log"));
    }
  }
  const auto table = comparison_table(runs);
  auto txt = open_output(dir / "comparison.txt");
  txt << table;
  finish(txt, dir / "comparison.txt");

  auto csv = open_output(dir / "comparison.csv");
  csv << "method,n_p,latent,rmse,bc_percent,corrections,test_samples,selected\n";
  for (const auto& r : runs) {
    std::string selected;
    for (const auto& s : r.model.selected_inputs()) selected += (selected.empty() ? "" : " ") + s;
    csv << r.model.method << ',' << r.report.inputs << ',' << r.report.latent << ',' << num(r.report.rmse) << ','
        << num(r.report.bc_percent) << ',' << r.report.corrections << ',' << r.report.trace.size() << ','
        << selected << '\n';
  }
  finish(csv, dir / "comparison.csv");
  out << table;
  return kOk;
}

void write_box(std::ostream& f, const std::string& method, const std::string& metric, const BoxStats& b) {
  std::string outliers;
  for (double v : b.outliers) outliers += (outliers.empty() ? "" : " ") + num(v);
  f << method << ',' << metric << ',' << b.count << ',' << b.missing << ',' << num(b.mean) << ',' << num(b.median) << ','
    << num(b.q1) << ',' << num(b.q3) << ',' << num(b.whisker_low) << ',' << num(b.whisker_high) << ',' << outliers << '\n';
}

int cmd_benchmark(const CommonOptions& o, std::ostream& out) {
  const auto cfg = experiment(o);
  std::optional<OutlierReport> report;
  const auto data = treat(load_dataset(cfg), cfg, report);
  const auto dir = prepare_dir(cfg.output_dir);
  const auto res = benchmark(data, cfg.methods, cfg.eval_split, cfg.split_fraction, cfg.eval_repeats, cfg.pipeline);

  auto runs = open_output(dir / "benchmark_runs.csv");
  runs << "repeat,method,ok,rmse,n_p,latent,bc_percent,error\n";
  for (std::size_t r = 0; r < res.runs.size(); ++r) {
    for (std::size_t m = 0; m < res.labels.size(); ++m) {
      const auto& c = res.runs[r][m];
      runs << r + 1 << ',' << res.labels[m] << ',' << (c.ok ? 1 : 0) << ',';
      if (c.ok) runs << num(c.rmse) << ',' << c.inputs << ',' << c.latent << ',' << num(c.bc_percent) << ',';
      else runs << ",,,,";
      std::string err = c.error;
      for (auto& ch : err)
        if (ch == ',' || ch == '\n') ch = ';';
      runs << err << '\n';
    }
  }
  finish(runs, dir / "benchmark_runs.csv");

  auto box = open_output(dir / "benchmark_summary.csv");
  box << "method,metric,count,missing,mean,median,q1,q3,whisker_low,whisker_high,outliers\n";
  std::ostringstream table;
  for (const auto& s : res.summary) {
    write_box(box, s.label, "rmse", s.rmse);
    write_box(box, s.label, "n_p", s.inputs);
    write_box(box, s.label, "bc_percent", s.bc_percent);
    char line[256];
    std::snprintf(line, sizeof line, "%-12s median RMSE %.4f  median n_p* %.1f  median BC %.1f%%  missing %zu\n",
                  s.label.c_str(), s.rmse.median, s.inputs.median, s.bc_percent.median, s.rmse.missing);
    table << line;
  }
  finish(box, dir / "benchmark_summary.csv");
  auto txt = open_output(dir / "benchmark_summary.txt");
  txt << table.str();
  finish(txt, dir / "benchmark_summary.txt");
  out << table.str();
  return kOk;
}

int cmd_synth(const CommonOptions& o, std::ostream& out) {
  if (o.config.empty()) throw ConfigError("--config: a plant specification file is required");
  auto cfg = load_synth(o.config);
  if (o.seed) cfg.spec.seed = *o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  const auto result = generate(cfg.spec, cfg.n);
  const auto dir = prepare_dir(cfg.output_dir);
  write_csv(result.data, dir / "dataset.csv", "t");
  write_truth_csv(result, dir / "truth.csv");
  out << "rows " << result.data.rows() << "\nlab_samples " << result.data.lab_count() << '\n';
  return kOk;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& out_path,
                std::ostream& out) {
  if (model_path.empty()) throw ConfigError("--model: a model file is required");
  if (data_path.empty()) throw ConfigError("--data: a dataset file is required");
  if (!fs::exists(data_path)) throw ConfigError("--data: file '" + data_path + "' does not exist");
  const auto file = read_model(model_path);
  // Source columns of the model only.
  std::vector<std::string> derived, raw;
  for (const auto& f : file.features) derived.push_back(std::visit([](const auto& feat) { return feat.name; }, f));
  auto want = [&](const std::string& name) {
    if (std::find(derived.begin(), derived.end(), name) == derived.end() &&
        std::find(raw.begin(), raw.end(), name) == raw.end())
      raw.push_back(name);
  };
  for (const auto& f : file.features) {
    if (const auto* r = std::get_if<RatioFeature>(&f)) {
      want(r->numerator);
      want(r->denominator);
    } else if (const auto* p = std::get_if<PctFeature>(&f)) {
      want(p->temperature);
      want(p->pressure);
    }
  }
  for (const auto& c : file.model.scaler.columns) want(c);
  auto data = load_csv(data_path, "", std::nullopt, raw);
  if (!file.features.empty()) data = derive_features(data, file.features);
  const auto cols = data.column_indices(file.model.scaler.columns);
  Matrix x(data.inputs.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) x.col(static_cast<Eigen::Index>(k)) = data.inputs.col(static_cast<Eigen::Index>(cols[k]));
  const Vector pred = file.model.predict(x);

  std::ostringstream csv;
  csv << "row,prediction\n";
  for (Eigen::Index i = 0; i < pred.size(); ++i) csv << data.origin[static_cast<std::size_t>(i)] << ',' << num(pred[i]) << '\n';
  if (out_path.empty()) {
    out << csv.str();
  } else {
    const fs::path p(out_path);
    if (p.has_parent_path()) prepare_dir(p.parent_path());
    auto f = open_output(p);
    f << csv.str();
    finish(f, p);
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Soft-sensor design: outlier treatment, sensor design and evaluation", "softsensor"};
  app.require_subcommand(1);
  CommonOptions opts;
  std::string model_path, data_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "Configuration file (JSON)");
    sub->add_option("--seed", opts.seed, "Override the configured seed");
    sub->add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", opts.out, "Output directory");
  };
  auto* pretreat = app.add_subcommand("pretreat", "Exclude ranges and flag outliers");
  auto* design = app.add_subcommand("design", "Design sensors on one split and compare them");
  auto* bench = app.add_subcommand("benchmark", "Repeat the design over many splits");
  auto* synth = app.add_subcommand("synth", "Generate a synthetic plant dataset");
  auto* predict = app.add_subcommand("predict", "Apply a saved model to a dataset");
  for (auto* sub : {pretreat, design, bench, synth}) add_common(sub);
  predict->add_option("--model", model_path, "Model file written by design")->required();
  predict->add_option("--data", data_path, "CSV file with the model's input columns")->required();
  predict->add_option("--out", opts.out, "Output CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (*pretreat) return cmd_pretreat(opts, out);
    if (*design) return cmd_design(opts, out);
    if (*bench) return cmd_benchmark(opts, out);
    if (*synth) return cmd_synth(opts, out);
    if (*predict) return cmd_predict(model_path, data_path, opts.out, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  return kConfigError;
}

}  // namespace softsensor::cli
