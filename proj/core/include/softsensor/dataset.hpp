#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "softsensor/types.hpp"

namespace softsensor {

/// Process history: online input measurements on every row, and a sparse
/// lab-analysed output that exists only where `has_output` is set.
struct Dataset {
  std::vector<std::string> columns;  ///< input names, unique and nonempty
  std::string output_name = "y";
  Matrix inputs;                     ///< rows x columns, engineering units
  Vector output;                     ///< NaN where no lab sample exists
  Mask has_output;
  std::vector<double> time;          ///< monotone sample keys
  IndexList origin;                  ///< 1-based row number in the source file

  std::size_t rows() const { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(inputs.cols()); }
  std::size_t lab_count() const;
  /// Row positions that carry a lab sample, in storage order.
  IndexList lab_rows() const;
  std::optional<std::size_t> column_index(const std::string& name) const;
  /// Position of every named column; throws DataError on a missing name.
  IndexList column_indices(std::span<const std::string> names) const;

  /// Throws DataError when the structural invariants do not hold.
  void validate() const;
};

/// Builds and validates a dataset. Empty `time` defaults to 1..n and empty
/// `has_output` is derived from the finiteness of `output`.
Dataset make_dataset(std::vector<std::string> columns, Matrix inputs, Vector output,
                     Mask has_output = {}, std::vector<double> time = {});

/// An empty `output_column` reads inputs only (every output missing).
Dataset load_csv(const std::filesystem::path& path, const std::string& output_column,
                 const std::optional<std::string>& time_column = std::nullopt,
                 const std::vector<std::string>& input_columns = {});

void write_csv(const Dataset& data, const std::filesystem::path& path,
               const std::string& time_column = "t");

Dataset select_rows(const Dataset& data, std::span<const std::size_t> rows);

// Derived inputs --------------------------------------------------------

struct RatioFeature {
  std::string name;
  std::string numerator;
  std::string denominator;
};

/// Pressure-compensated temperature from the Clausius-Clapeyron relation:
/// 1 / (r_over_hv * ln(P / p_ref) + 1 / T), T absolute.
struct PctFeature {
  std::string name;
  std::string temperature;
  std::string pressure;
  double r_over_hv = 0.0;  ///< gas constant over heat of vaporization, 1/K
  double p_ref = 1.0;
};

using Feature = std::variant<RatioFeature, PctFeature>;
using FeatureSpec = std::vector<Feature>;

double pressure_compensated_temperature(double temperature, double pressure, double r_over_hv,
                                        double p_ref);

/// Appends the derived columns; existing columns are left untouched.
Dataset derive_features(const Dataset& data, const FeatureSpec& spec);

// Scaling -----------------------------------------------------------------

enum class ScalerKind { center, range, standardize };

std::string to_string(ScalerKind kind);
ScalerKind parse_scaler_kind(const std::string& name);

/// Per-column affine map x_n = (x - offset) / scale, and the same for the
/// output. `offset` is the column mean for center/standardize and the
/// mid-range for the range kind.
struct Scaler {
  ScalerKind kind = ScalerKind::center;
  std::vector<std::string> columns;
  Vector offset;
  Vector scale;
  double output_offset = 0.0;
  double output_scale = 1.0;

  Matrix apply_inputs(const Matrix& raw) const;
  Matrix invert_inputs(const Matrix& normalized) const;
  double apply_output(double raw) const { return (raw - output_offset) / output_scale; }
  double invert_output(double normalized) const { return normalized * output_scale + output_offset; }
};

Scaler fit_scaler(const Dataset& data, std::span<const std::size_t> rows, ScalerKind kind);
Scaler identity_scaler(const std::vector<std::string>& columns);
Dataset apply_scaler(const Dataset& data, const Scaler& scaler);
Dataset invert_scaler(const Dataset& data, const Scaler& scaler);
Vector invert_output(const Vector& normalized, const Scaler& scaler);

// Splitting -------------------------------------------------------------

enum class SplitKind { chronological, random };

std::string to_string(SplitKind kind);
SplitKind parse_split_kind(const std::string& name);

/// Training / testing partition of the lab rows. Both sets are sorted by
/// time key so the test set can be walked in lab-time order.
struct SplitPlan {
  IndexList train;
  IndexList test;
  SplitKind kind = SplitKind::chronological;
  std::uint64_t seed = 0;
  double fraction = 0.5;
};

/// Training size is ceil(fraction * lab rows).
SplitPlan split(const Dataset& data, SplitKind kind, double fraction, std::uint64_t seed = 0);

/// Removes rows falling in any of the 1-based inclusive [start, end] ranges.
Dataset exclude_ranges(const Dataset& data,
                       const std::vector<std::pair<std::size_t, std::size_t>>& ranges);

/// Shortest round-trip text for a double.
std::string format_double(double value);

}  // namespace softsensor
