#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "softsensor/dataset.hpp"
#include "softsensor/regress.hpp"

namespace softsensor::cli {

/// A sensor together with what is needed to apply it to a raw CSV file.
struct ModelFile {
  SensorModel model;
  std::string output_name;
  FeatureSpec features;
};

nlohmann::json model_to_json(const ModelFile& file);
ModelFile model_from_json(const nlohmann::json& j);

void write_model(const ModelFile& file, const std::filesystem::path& path);
ModelFile read_model(const std::filesystem::path& path);

}  // namespace softsensor::cli
