#include "model_io.hpp"

#include <fstream>

#include "config.hpp"

namespace softsensor::cli {

using nlohmann::json;

namespace {

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector json_vector(const json& j, const std::string& name) {
  if (!j.is_array()) throw ConfigError("model." + name + ": expected a list of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("model." + name + ": expected a list of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

const json& need(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string("model.") + key + ": missing required field");
  return *it;
}

}  // namespace

json model_to_json(const ModelFile& file) {
  const auto& m = file.model;
  const auto& s = m.scaler;
  json support = json::array();
  for (bool b : m.support) support.push_back(b ? 1 : 0);
  json out;
  out["format"] = "softsensor-model";
  out["version"] = 1;
  out["method"] = m.method;
  out["output"] = file.output_name;
  out["inputs"] = s.columns;
  out["selected"] = m.selected_inputs();
  out["support"] = support;
  out["latent_components"] = m.latent;
  out["normalized"] = {{"coefficients", vector_json(m.coef)}, {"bias", m.bias}};
  out["engineering"] = {{"coefficients", vector_json(m.engineering_coef())}, {"bias", m.engineering_bias()}};
  out["scaler"] = {{"kind", to_string(s.kind)},
                   {"offset", vector_json(s.offset)},
                   {"scale", vector_json(s.scale)},
                   {"output_offset", s.output_offset},
                   {"output_scale", s.output_scale}};
  out["features"] = features_to_json(file.features);
  out["notes"] = m.notes;
  return out;
}

ModelFile model_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != "softsensor-model") throw ConfigError("model: not a softsensor model file");
  ModelFile f;
  auto& m = f.model;
  m.method = need(j, "method").get<std::string>();
  f.output_name = need(j, "output").get<std::string>();
  m.scaler.columns = need(j, "inputs").get<std::vector<std::string>>();
  const auto& norm = need(j, "normalized");
  m.coef = json_vector(need(norm, "coefficients"), "normalized.coefficients");
  m.bias = need(norm, "bias").get<double>();
  const auto& sc = need(j, "scaler");
  m.scaler.kind = parse_scaler_kind(need(sc, "kind").get<std::string>());
  m.scaler.offset = json_vector(need(sc, "offset"), "scaler.offset");
  m.scaler.scale = json_vector(need(sc, "scale"), "scaler.scale");
  m.scaler.output_offset = need(sc, "output_offset").get<double>();
  m.scaler.output_scale = need(sc, "output_scale").get<double>();
  const auto p = static_cast<Eigen::Index>(m.scaler.columns.size());
  if (m.coef.size() != p || m.scaler.offset.size() != p || m.scaler.scale.size() != p) {
    throw ConfigError("model: coefficient and scaler lengths do not match the input list");
  }
  m.support.resize(static_cast<std::size_t>(p));
  for (Eigen::Index k = 0; k < p; ++k) m.support[static_cast<std::size_t>(k)] = m.coef[k] != 0.0;
  m.latent = j.value("latent_components", std::size_t{0});
  if (auto it = j.find("notes"); it != j.end()) m.notes = it->get<std::vector<std::string>>();
  if (auto it = j.find("features"); it != j.end()) f.features = features_from_json(*it, "model.features");
  return f;
}

void write_model(const ModelFile& file, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << model_to_json(file).dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ModelFile read_model(const std::filesystem::path& path) {
  try {
    return model_from_json(read_json(path));
  } catch (const json::exception& e) {
    throw ConfigError("model '" + path.string() + "': " + e.what());
  }
}

}  // namespace softsensor::cli
