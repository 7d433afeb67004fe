#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "softsensor/dataset.hpp"

namespace softsensor {

/// From row `start` (1-based) on, the output gains `bias` and the true
/// coefficients gain `coef_delta` (empty = unchanged).
struct RegimeShift {
  std::size_t start = 1;
  double bias = 0.0;
  std::vector<double> coef_delta;
};

struct PlantSpec {
  std::size_t n_inputs = 11;
  std::vector<std::size_t> support{0, 2, 5, 8};  ///< 0-based active columns
  std::vector<double> coefficients{1.5, -0.8, 0.6, 1.0};
  double intercept = 10.0;
  std::size_t block_size = 3;       ///< consecutive columns sharing a latent factor
  double block_correlation = 0.6;
  std::vector<double> input_offset;  ///< defaults to 50 + 25 j
  std::vector<double> input_scale;   ///< defaults to 1 + 0.5 j
  double noise_sd = 0.1;
  double contamination = 0.0;        ///< share of non-shutdown rows
  double outlier_magnitude = 8.0;    ///< per-coordinate shift in input sd
  std::vector<std::pair<std::size_t, std::size_t>> shutdowns;  ///< 1-based inclusive rows
  double shutdown_shift = 6.0;       ///< level drop in input sd
  std::vector<RegimeShift> regimes;
  std::size_t stride = 40;           ///< every stride-th row carries a lab sample
  std::uint64_t seed = 0;
};

struct SynthTruth {
  Mask outlier;
  Mask shutdown;
  Mask support;
  Vector coefficients;  ///< engineering units, before regime shifts
  double intercept = 0.0;
  Vector clean_output;  ///< noiseless output on every row
};

struct SynthResult {
  Dataset data;
  SynthTruth truth;
};

/// Throws InvalidArgument on an infeasible spec or n < 10.
SynthResult generate(const PlantSpec& spec, std::size_t n);

/// One line per row: row, outlier, shutdown, lab, y_true.
void write_truth_csv(const SynthResult& result, const std::filesystem::path& path);

}  // namespace softsensor
