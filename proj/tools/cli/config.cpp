#include "config.hpp"

#include <fstream>
#include <set>

namespace softsensor::cli {

using nlohmann::json;

namespace {

std::string join(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError((where.empty() ? std::string("config") : where) + ": expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw ConfigError(join(where, k) + ": unknown field");
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

double number(const json& obj, const char* key, const std::string& where, double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) throw ConfigError(join(where, key) + ": expected a number");
  return v->get<double>();
}

std::size_t count(const json& v, const std::string& name) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(name + ": expected a nonnegative integer");
  return v.get<std::size_t>();
}

std::size_t count(const json& obj, const char* key, const std::string& where, std::size_t fallback) {
  const json* v = find(obj, key);
  return v ? count(*v, join(where, key)) : fallback;
}

std::string text(const json& obj, const char* key, const std::string& where, const std::string& fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) throw ConfigError(join(where, key) + ": expected a string");
  return v->get<std::string>();
}

std::string required_text(const json& obj, const char* key, const std::string& where) {
  if (!find(obj, key)) throw ConfigError(join(where, key) + ": missing required field");
  return text(obj, key, where, "");
}

bool flag(const json& obj, const char* key, const std::string& where, bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError(join(where, key) + ": expected true or false");
  return v->get<bool>();
}

std::vector<std::string> text_list(const json& obj, const char* key, const std::string& where) {
  std::vector<std::string> out;
  const json* v = find(obj, key);
  if (!v) return out;
  if (!v->is_array()) throw ConfigError(join(where, key) + ": expected a list of strings");
  for (const auto& e : *v) {
    if (!e.is_string()) throw ConfigError(join(where, key) + ": expected a list of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::vector<double> number_list(const json& obj, const char* key, const std::string& where) {
  std::vector<double> out;
  const json* v = find(obj, key);
  if (!v) return out;
  if (!v->is_array()) throw ConfigError(join(where, key) + ": expected a list of numbers");
  for (const auto& e : *v) {
    if (!e.is_number()) throw ConfigError(join(where, key) + ": expected a list of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> ranges(const json& obj, const char* key, const std::string& where) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const json* v = find(obj, key);
  if (!v) return out;
  const auto name = join(where, key);
  if (!v->is_array()) throw ConfigError(name + ": expected a list of [start, end] pairs");
  for (const auto& e : *v) {
    if (!e.is_array() || e.size() != 2) throw ConfigError(name + ": expected a list of [start, end] pairs");
    out.emplace_back(count(e[0], name), count(e[1], name));
  }
  return out;
}

template <class Fn>
auto parse_enum(const std::string& name, const std::string& value, Fn fn) {
  try {
    return fn(value);
  } catch (const InvalidArgument& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() ? p : base / p;
}

}  // namespace

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
}

json features_to_json(const FeatureSpec& spec) {
  json out = json::array();
  for (const auto& f : spec) {
    if (const auto* r = std::get_if<RatioFeature>(&f)) {
      out.push_back({{"kind", "ratio"}, {"name", r->name}, {"numerator", r->numerator}, {"denominator", r->denominator}});
    } else {
      const auto& p = std::get<PctFeature>(f);
      out.push_back({{"kind", "pct"},
                     {"name", p.name},
                     {"temperature", p.temperature},
                     {"pressure", p.pressure},
                     {"r_over_hv", p.r_over_hv},
                     {"p_ref", p.p_ref}});
    }
  }
  return out;
}

FeatureSpec features_from_json(const json& j, const std::string& where) {
  FeatureSpec spec;
  if (j.is_null()) return spec;
  if (!j.is_array()) throw ConfigError(where + ": expected a list of feature objects");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& f = j[i];
    const auto at = where + "[" + std::to_string(i) + "]";
    if (!f.is_object()) throw ConfigError(at + ": expected an object");
    const auto kind = required_text(f, "kind", at);
    if (kind == "ratio") {
      allow_keys(f, at, {"kind", "name", "numerator", "denominator"});
      spec.push_back(RatioFeature{required_text(f, "name", at), required_text(f, "numerator", at),
                                  required_text(f, "denominator", at)});
    } else if (kind == "pct") {
      allow_keys(f, at, {"kind", "name", "temperature", "pressure", "r_over_hv", "p_ref"});
      if (!find(f, "r_over_hv")) throw ConfigError(at + ".r_over_hv: missing required field");
      spec.push_back(PctFeature{required_text(f, "name", at), required_text(f, "temperature", at),
                                required_text(f, "pressure", at), number(f, "r_over_hv", at, 0.0),
                                number(f, "p_ref", at, 1.0)});
    } else {
      throw ConfigError(at + ".kind: unknown feature kind '" + kind + "'");
    }
  }
  return spec;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  const json root = read_json(path);
  const auto base = path.parent_path();
  allow_keys(root, "", {"seed", "output_dir", "dataset", "treatment", "scaler", "split", "methods", "design", "subset",
                        "pruning", "evaluation"});
  ExperimentConfig cfg;
  if (const json* s = find(root, "seed")) cfg.seed = count(*s, "seed");
  cfg.output_dir = resolve(base, text(root, "output_dir", "", "softsensor_out"));

  const json* ds = find(root, "dataset");
  if (!ds) throw ConfigError("dataset: missing required section");
  allow_keys(*ds, "dataset", {"path", "output", "time", "inputs", "features", "exclude"});
  const auto data_path = required_text(*ds, "path", "dataset");
  cfg.dataset.path = resolve(base, data_path);
  if (!std::filesystem::exists(cfg.dataset.path)) {
    throw ConfigError("dataset.path: file '" + cfg.dataset.path.string() + "' does not exist");
  }
  cfg.dataset.output = required_text(*ds, "output", "dataset");
  if (find(*ds, "time")) cfg.dataset.time = text(*ds, "time", "dataset", "");
  cfg.dataset.inputs = text_list(*ds, "inputs", "dataset");
  if (const json* f = find(*ds, "features")) cfg.dataset.features = features_from_json(*f, "dataset.features");
  cfg.dataset.exclude = ranges(*ds, "exclude", "dataset");

  if (const json* t = find(root, "treatment")) {
    allow_keys(*t, "treatment", {"method", "confidence", "h", "restarts", "cutoff", "k", "k_max", "min_cluster_fraction"});
    const auto method = text(*t, "method", "treatment", "mcd");
    if (method != "none") {
      TreatmentConfig tc;
      tc.method = parse_enum("treatment.method", method, parse_detector_kind);
      tc.confidence = number(*t, "confidence", "treatment", tc.confidence);
      if (const json* h = find(*t, "h")) tc.h = count(*h, "treatment.h");
      tc.restarts = count(*t, "restarts", "treatment", tc.restarts);
      const auto cutoff = text(*t, "cutoff", "treatment", "f");
      if (cutoff == "f") tc.cutoff = CutoffFamily::f_approximation;
      else if (cutoff == "chi2") tc.cutoff = CutoffFamily::chi_square;
      else throw ConfigError("treatment.cutoff: expected 'f' or 'chi2'");
      tc.k = count(*t, "k", "treatment", tc.k);
      tc.k_max = count(*t, "k_max", "treatment", tc.k_max);
      tc.min_cluster_fraction = number(*t, "min_cluster_fraction", "treatment", tc.min_cluster_fraction);
      cfg.treatment = tc;
    }
  }

  if (const json* s = find(root, "scaler")) {
    allow_keys(*s, "scaler", {"kind", "fit_on"});
    cfg.pipeline.scaler = parse_enum("scaler.kind", text(*s, "kind", "scaler", "standardize"), parse_scaler_kind);
    const auto fit_on = text(*s, "fit_on", "scaler", "train");
    if (fit_on != "train" && fit_on != "all") throw ConfigError("scaler.fit_on: expected 'train' or 'all'");
    cfg.pipeline.scaler_on_all_rows = fit_on == "all";
  }
  if (const json* s = find(root, "split")) {
    allow_keys(*s, "split", {"kind", "fraction"});
    cfg.split_kind = parse_enum("split.kind", text(*s, "kind", "split", "chronological"), parse_split_kind);
    cfg.split_fraction = number(*s, "fraction", "split", cfg.split_fraction);
  }
  if (const json* p = find(root, "pruning")) {
    allow_keys(*p, "pruning", {"threshold"});
    cfg.pipeline.prune_threshold = number(*p, "threshold", "pruning", cfg.pipeline.prune_threshold);
  }
  if (const json* e = find(root, "evaluation")) {
    allow_keys(*e, "evaluation", {"theta", "repeats", "split"});
    cfg.pipeline.theta = number(*e, "theta", "evaluation", cfg.pipeline.theta);
    cfg.eval_repeats = count(*e, "repeats", "evaluation", cfg.eval_repeats);
    cfg.eval_split = parse_enum("evaluation.split", text(*e, "split", "evaluation", "random"), parse_split_kind);
  }

  SubsetConfig subset;
  if (const json* s = find(root, "subset")) {
    allow_keys(*s, "subset", {"exact_limit", "node_budget", "big_m", "search_log"});
    subset.exact_limit = count(*s, "exact_limit", "subset", subset.exact_limit);
    subset.node_budget = count(*s, "node_budget", "subset", subset.node_budget);
    if (find(*s, "big_m")) subset.big_m = number(*s, "big_m", "subset", 0.0);
    cfg.search_log = flag(*s, "search_log", "subset", false);
    subset.record_log = cfg.search_log;
  }

  MethodSpec defaults;
  if (const json* d = find(root, "design")) {
    allow_keys(*d, "design", {"variance_target", "components", "lasso_criteria", "lasso_cv_repeats", "criterion", "k_max",
                              "cv_repeats"});
    defaults.latent.variance_target = number(*d, "variance_target", "design", defaults.latent.variance_target);
    if (const json* c = find(*d, "components")) defaults.latent.components = count(*c, "design.components");
    if (find(*d, "lasso_criteria")) {
      defaults.lasso_criteria.clear();
      for (const auto& c : text_list(*d, "lasso_criteria", "design"))
        defaults.lasso_criteria.push_back(parse_enum("design.lasso_criteria", c, parse_criterion));
    }
    defaults.lasso_cv_repeats = count(*d, "lasso_cv_repeats", "design", defaults.lasso_cv_repeats);
    defaults.criterion = parse_enum("design.criterion", text(*d, "criterion", "design", "bic"), parse_criterion);
    defaults.k_max = count(*d, "k_max", "design", defaults.k_max);
    defaults.cv_repeats = count(*d, "cv_repeats", "design", defaults.cv_repeats);
  }
  const auto names = text_list(root, "methods", "");
  if (names.empty()) throw ConfigError("methods: expected a nonempty list of method names");
  for (const auto& name : names) {
    MethodSpec m = parse_enum("methods", name, parse_method);
    m.latent = defaults.latent;
    m.lasso_criteria = defaults.lasso_criteria;
    m.lasso_cv_repeats = defaults.lasso_cv_repeats;
    if (name == "ss") {
      m.criterion = defaults.criterion;
      m.label = "ss-" + to_string(m.criterion);
    }
    m.k_max = defaults.k_max;
    m.cv_repeats = defaults.cv_repeats;
    m.subset = subset;
    cfg.methods.push_back(std::move(m));
  }
  cfg.pipeline.seed = cfg.seed;
  return cfg;
}

SynthConfig load_synth(const std::filesystem::path& path) {
  const json root = read_json(path);
  allow_keys(root, "", {"n", "output_dir", "seed", "n_inputs", "support", "coefficients", "intercept", "block_size",
                        "block_correlation", "input_offset", "input_scale", "noise_sd", "contamination",
                        "outlier_magnitude", "shutdowns", "shutdown_shift", "regimes", "stride"});
  SynthConfig cfg;
  if (!find(root, "n")) throw ConfigError("n: missing required field");
  cfg.n = count(*find(root, "n"), "n");
  cfg.output_dir = resolve(path.parent_path(), text(root, "output_dir", "", "softsensor_out"));
  auto& s = cfg.spec;
  if (const json* v = find(root, "seed")) s.seed = count(*v, "seed");
  s.n_inputs = count(root, "n_inputs", "", s.n_inputs);
  if (const json* v = find(root, "support")) {
    if (!v->is_array()) throw ConfigError("support: expected a list of 1-based column numbers");
    s.support.clear();
    for (const auto& e : *v) {
      const auto j = count(e, "support");
      if (j < 1) throw ConfigError("support: column numbers are 1-based");
      s.support.push_back(j - 1);
    }
  }
  if (find(root, "coefficients")) s.coefficients = number_list(root, "coefficients", "");
  s.intercept = number(root, "intercept", "", s.intercept);
  s.block_size = count(root, "block_size", "", s.block_size);
  s.block_correlation = number(root, "block_correlation", "", s.block_correlation);
  s.input_offset = number_list(root, "input_offset", "");
  s.input_scale = number_list(root, "input_scale", "");
  s.noise_sd = number(root, "noise_sd", "", s.noise_sd);
  s.contamination = number(root, "contamination", "", s.contamination);
  s.outlier_magnitude = number(root, "outlier_magnitude", "", s.outlier_magnitude);
  s.shutdowns = ranges(root, "shutdowns", "");
  s.shutdown_shift = number(root, "shutdown_shift", "", s.shutdown_shift);
  s.stride = count(root, "stride", "", s.stride);
  if (const json* v = find(root, "regimes")) {
    if (!v->is_array()) throw ConfigError("regimes: expected a list of objects");
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto at = "regimes[" + std::to_string(i) + "]";
      const auto& r = (*v)[i];
      allow_keys(r, at, {"start", "bias", "coef_delta"});
      RegimeShift shift;
      shift.start = count(r, "start", at, 1);
      shift.bias = number(r, "bias", at, 0.0);
      shift.coef_delta = number_list(r, "coef_delta", at);
      s.regimes.push_back(std::move(shift));
    }
  }
  return cfg;
}

}  // namespace softsensor::cli
