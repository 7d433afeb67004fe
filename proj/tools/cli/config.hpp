#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "softsensor/dataset.hpp"
#include "softsensor/design.hpp"
#include "softsensor/error.hpp"
#include "softsensor/synth.hpp"

namespace softsensor::cli {

/// Malformed or incomplete configuration; the message names the field.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct DatasetSection {
  std::filesystem::path path;
  std::string output;
  std::optional<std::string> time;
  std::vector<std::string> inputs;
  FeatureSpec features;
  std::vector<std::pair<std::size_t, std::size_t>> exclude;
};

struct ExperimentConfig {
  DatasetSection dataset;
  std::optional<TreatmentConfig> treatment;
  PipelineConfig pipeline;
  SplitKind split_kind = SplitKind::chronological;
  double split_fraction = 0.5;
  std::vector<MethodSpec> methods;
  std::size_t eval_repeats = 50;
  SplitKind eval_split = SplitKind::random;
  bool search_log = false;
  std::filesystem::path output_dir = "softsensor_out";
  std::uint64_t seed = 0;
};

/// Relative paths resolve against the directory of the config file.
ExperimentConfig load_experiment(const std::filesystem::path& path);

struct SynthConfig {
  PlantSpec spec;
  std::size_t n = 0;
  std::filesystem::path output_dir = "softsensor_out";
};

SynthConfig load_synth(const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);

nlohmann::json features_to_json(const FeatureSpec& spec);
FeatureSpec features_from_json(const nlohmann::json& j, const std::string& where);

}  // namespace softsensor::cli
