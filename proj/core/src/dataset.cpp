#include "softsensor/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "softsensor/error.hpp"
#include "softsensor/random.hpp"

namespace softsensor {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Comma-separated fields; double quotes may wrap a field containing commas.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

std::optional<double> parse_number(const std::string& cell) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void require_columns_match(const Dataset& data, const Scaler& scaler) {
  if (data.columns != scaler.columns) {
    throw InvalidArgument("scaler columns do not match dataset columns (scaler has " +
                          std::to_string(scaler.columns.size()) + ", dataset has " +
                          std::to_string(data.cols()) + ")");
  }
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::size_t Dataset::lab_count() const {
  return static_cast<std::size_t>(std::count(has_output.begin(), has_output.end(), true));
}

IndexList Dataset::lab_rows() const {
  IndexList out;
  for (std::size_t i = 0; i < has_output.size(); ++i)
    if (has_output[i]) out.push_back(i);
  return out;
}

std::optional<std::size_t> Dataset::column_index(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns.begin());
}

IndexList Dataset::column_indices(std::span<const std::string> names) const {
  IndexList out;
  for (const auto& name : names) {
    auto j = column_index(name);
    if (!j) throw DataError("missing column '" + name + "'");
    out.push_back(*j);
  }
  return out;
}

void Dataset::validate() const {
  const std::size_t n = rows();
  if (n < 1) throw DataError("dataset has no rows");
  if (cols() < 1) throw DataError("dataset has no input columns");
  if (columns.size() != cols()) throw DataError("column name count does not match matrix width");
  if (static_cast<std::size_t>(output.size()) != n || has_output.size() != n || time.size() != n ||
      origin.size() != n) {
    throw DataError("row count of output, mask, time or origin does not match the input matrix");
  }
  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (c.empty()) throw DataError("empty column name");
    if (!seen.insert(c).second) throw DataError("duplicate column '" + c + "'");
  }
}

Dataset make_dataset(std::vector<std::string> columns, Matrix inputs, Vector output, Mask has_output,
                     std::vector<double> time) {
  Dataset d;
  const auto n = static_cast<std::size_t>(inputs.rows());
  d.columns = std::move(columns);
  d.inputs = std::move(inputs);
  d.output = std::move(output);
  if (has_output.empty()) {
    has_output.resize(static_cast<std::size_t>(d.output.size()));
    for (Eigen::Index i = 0; i < d.output.size(); ++i) has_output[i] = std::isfinite(d.output[i]);
  }
  d.has_output = std::move(has_output);
  for (std::size_t i = 0; i < d.has_output.size() && i < static_cast<std::size_t>(d.output.size());
       ++i) {
    if (!d.has_output[i]) d.output[static_cast<Eigen::Index>(i)] = kNaN;
  }
  if (time.empty()) {
    time.resize(n);
    std::iota(time.begin(), time.end(), 1.0);
  }
  d.time = std::move(time);
  d.origin.resize(n);
  std::iota(d.origin.begin(), d.origin.end(), std::size_t{1});
  d.validate();
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& output_column,
                 const std::optional<std::string>& time_column,
                 const std::vector<std::string>& input_columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path.string() + "' has no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j].empty()) throw DataError("empty column name in header (column " + std::to_string(j + 1) + ")");
    if (!position.emplace(header[j], j).second) throw DataError("duplicate column '" + header[j] + "'");
  }
  auto locate = [&](const std::string& name) {
    auto it = position.find(name);
    if (it == position.end()) throw DataError("missing column '" + name + "'");
    return it->second;
  };
  constexpr std::size_t kNoColumn = static_cast<std::size_t>(-1);
  const std::size_t out_pos = output_column.empty() ? kNoColumn : locate(output_column);
  const std::size_t time_pos = time_column ? locate(*time_column) : kNoColumn;

  std::vector<std::string> names;
  std::vector<std::size_t> in_pos;
  if (input_columns.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == out_pos || j == time_pos) continue;
      names.push_back(header[j]);
      in_pos.push_back(j);
    }
  } else {
    for (const auto& name : input_columns) {
      names.push_back(name);
      in_pos.push_back(locate(name));
    }
  }
  if (names.empty()) throw DataError("no input columns in '" + path.string() + "'");

  std::vector<double> values;
  std::vector<double> out_values;
  Mask mask;
  std::vector<double> time;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " cells, found " + std::to_string(cells.size()));
    }
    for (std::size_t k = 0; k < in_pos.size(); ++k) {
      const auto& cell = cells[in_pos[k]];
      if (cell.empty()) {
        throw DataError("line " + std::to_string(line_no) + ": empty cell in input column '" + names[k] + "'");
      }
      auto v = parse_number(cell);
      if (!v) {
        throw DataError("line " + std::to_string(line_no) + ": non-numeric cell '" + cell + "' in column '" +
                        names[k] + "'");
      }
      values.push_back(*v);
    }
    const std::string ycell = out_pos == kNoColumn ? std::string() : cells[out_pos];
    if (ycell.empty()) {
      out_values.push_back(kNaN);
      mask.push_back(false);
    } else {
      auto v = parse_number(ycell);
      if (!v) {
        throw DataError("line " + std::to_string(line_no) + ": non-numeric cell '" + ycell + "' in column '" +
                        output_column + "'");
      }
      out_values.push_back(*v);
      mask.push_back(true);
    }
    if (time_pos != kNoColumn) {
      auto v = parse_number(cells[time_pos]);
      if (!v) throw DataError("line " + std::to_string(line_no) + ": non-numeric time key");
      time.push_back(*v);
    } else {
      time.push_back(static_cast<double>(time.size() + 1));
    }
  }
  const std::size_t n = mask.size();
  if (n == 0) throw DataError("'" + path.string() + "' has zero data rows");

  Matrix inputs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < names.size(); ++j) inputs(i, j) = values[i * names.size() + j];
  Vector output = Eigen::Map<Vector>(out_values.data(), static_cast<Eigen::Index>(n));

  Dataset d = make_dataset(std::move(names), std::move(inputs), std::move(output), std::move(mask), std::move(time));
  if (!output_column.empty()) d.output_name = output_column;
  return d;
}

void write_csv(const Dataset& data, const std::filesystem::path& path, const std::string& time_column) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << quote_if_needed(time_column);
  for (const auto& c : data.columns) out << ',' << quote_if_needed(c);
  out << ',' << quote_if_needed(data.output_name) << '\n';
  for (std::size_t i = 0; i < data.rows(); ++i) {
    out << format_double(data.time[i]);
    for (std::size_t j = 0; j < data.cols(); ++j) out << ',' << format_double(data.inputs(i, j));
    out << ',';
    if (data.has_output[i]) out << format_double(data.output[static_cast<Eigen::Index>(i)]);
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Dataset select_rows(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset d;
  d.columns = data.columns;
  d.output_name = data.output_name;
  const auto n = static_cast<Eigen::Index>(rows.size());
  d.inputs.resize(n, data.inputs.cols());
  d.output.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto i = rows[static_cast<std::size_t>(k)];
    if (i >= data.rows()) throw InvalidArgument("row index out of range");
    d.inputs.row(k) = data.inputs.row(static_cast<Eigen::Index>(i));
    d.output[k] = data.output[static_cast<Eigen::Index>(i)];
    d.has_output.push_back(data.has_output[i]);
    d.time.push_back(data.time[i]);
    d.origin.push_back(data.origin[i]);
  }
  return d;
}

double pressure_compensated_temperature(double temperature, double pressure, double r_over_hv, double p_ref) {
  return 1.0 / (r_over_hv * std::log(pressure / p_ref) + 1.0 / temperature);
}

Dataset derive_features(const Dataset& data, const FeatureSpec& spec) {
  Dataset d = data;
  const auto n = static_cast<Eigen::Index>(data.rows());
  for (const auto& feature : spec) {
    Vector column(n);
    std::string name;
    if (const auto* ratio = std::get_if<RatioFeature>(&feature)) {
      const auto num = d.column_indices(std::vector{ratio->numerator})[0];
      const auto den = d.column_indices(std::vector{ratio->denominator})[0];
      for (Eigen::Index i = 0; i < n; ++i) {
        const double q = d.inputs(i, static_cast<Eigen::Index>(den));
        if (q == 0.0) {
          throw DataError("zero denominator '" + ratio->denominator + "' at row " + std::to_string(i + 1));
        }
        column[i] = d.inputs(i, static_cast<Eigen::Index>(num)) / q;
      }
      name = ratio->name.empty() ? ratio->numerator + "/" + ratio->denominator : ratio->name;
    } else {
      const auto& pct = std::get<PctFeature>(feature);
      const auto t = d.column_indices(std::vector{pct.temperature})[0];
      const auto p = d.column_indices(std::vector{pct.pressure})[0];
      if (!(pct.p_ref > 0.0)) throw InvalidArgument("pct reference pressure must be positive");
      for (Eigen::Index i = 0; i < n; ++i) {
        const double temp = d.inputs(i, static_cast<Eigen::Index>(t));
        const double pres = d.inputs(i, static_cast<Eigen::Index>(p));
        if (!(temp > 0.0)) throw DataError("nonpositive temperature at row " + std::to_string(i + 1));
        if (!(pres > 0.0)) throw DataError("nonpositive pressure at row " + std::to_string(i + 1));
        column[i] = pressure_compensated_temperature(temp, pres, pct.r_over_hv, pct.p_ref);
        if (!std::isfinite(column[i])) throw DataError("non-finite PCT at row " + std::to_string(i + 1));
      }
      name = pct.name.empty() ? "PCT(" + pct.temperature + ")" : pct.name;
    }
    if (d.column_index(name)) throw DataError("derived column '" + name + "' already exists");
    d.inputs.conservativeResize(Eigen::NoChange, d.inputs.cols() + 1);
    d.inputs.col(d.inputs.cols() - 1) = column;
    d.columns.push_back(name);
  }
  return d;
}

std::string to_string(ScalerKind kind) {
  switch (kind) {
    case ScalerKind::center: return "center";
    case ScalerKind::range: return "range";
    case ScalerKind::standardize: return "standardize";
  }
  return "center";
}

ScalerKind parse_scaler_kind(const std::string& name) {
  if (name == "center") return ScalerKind::center;
  if (name == "range") return ScalerKind::range;
  if (name == "standardize") return ScalerKind::standardize;
  throw InvalidArgument("unknown scaler kind '" + name + "'");
}

Matrix Scaler::apply_inputs(const Matrix& raw) const {
  if (raw.cols() != offset.size()) throw InvalidArgument("column count does not match scaler");
  return (raw.rowwise() - offset.transpose()).array().rowwise() / scale.transpose().array();
}

Matrix Scaler::invert_inputs(const Matrix& normalized) const {
  if (normalized.cols() != offset.size()) throw InvalidArgument("column count does not match scaler");
  return (normalized.array().rowwise() * scale.transpose().array()).matrix().rowwise() + offset.transpose();
}

Scaler fit_scaler(const Dataset& data, std::span<const std::size_t> rows, ScalerKind kind) {
  if (rows.empty()) throw InvalidArgument("scaler needs at least one row");
  const auto p = static_cast<Eigen::Index>(data.cols());
  Scaler s;
  s.kind = kind;
  s.columns = data.columns;
  s.offset = Vector::Zero(p);
  s.scale = Vector::Ones(p);

  // Column statistics over a list of values.
  struct Stats {
    double mean = 0, lo = 0, hi = 0, sd = 0;
  };
  auto stats = [](const std::vector<double>& v) {
    Stats st;
    st.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    st.lo = *std::min_element(v.begin(), v.end());
    st.hi = *std::max_element(v.begin(), v.end());
    double ss = 0;
    for (double x : v) ss += (x - st.mean) * (x - st.mean);
    st.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return st;
  };
  auto fill = [&](const Stats& st, const std::string& name, double& offset, double& scale) {
    switch (kind) {
      case ScalerKind::center:
        offset = st.mean;
        scale = 1.0;
        break;
      case ScalerKind::range:
        if (!(st.hi > st.lo)) throw DataError("constant column '" + name + "' cannot be range-scaled");
        offset = 0.5 * (st.hi + st.lo);
        scale = 0.5 * (st.hi - st.lo);
        break;
      case ScalerKind::standardize:
        if (!(st.sd > 0.0)) throw DataError("constant column '" + name + "' cannot be standardized");
        offset = st.mean;
        scale = st.sd;
        break;
    }
  };

  std::vector<double> buf;
  for (Eigen::Index j = 0; j < p; ++j) {
    buf.clear();
    for (auto i : rows) {
      if (i >= data.rows()) throw InvalidArgument("row index out of range");
      buf.push_back(data.inputs(static_cast<Eigen::Index>(i), j));
    }
    fill(stats(buf), data.columns[static_cast<std::size_t>(j)], s.offset[j], s.scale[j]);
  }
  buf.clear();
  for (auto i : rows)
    if (data.has_output[i]) buf.push_back(data.output[static_cast<Eigen::Index>(i)]);
  if (!buf.empty()) fill(stats(buf), data.output_name, s.output_offset, s.output_scale);
  return s;
}

Scaler identity_scaler(const std::vector<std::string>& columns) {
  Scaler s;
  s.kind = ScalerKind::center;
  s.columns = columns;
  s.offset = Vector::Zero(static_cast<Eigen::Index>(columns.size()));
  s.scale = Vector::Ones(static_cast<Eigen::Index>(columns.size()));
  return s;
}

Dataset apply_scaler(const Dataset& data, const Scaler& scaler) {
  require_columns_match(data, scaler);
  Dataset d = data;
  d.inputs = scaler.apply_inputs(data.inputs);
  for (Eigen::Index i = 0; i < d.output.size(); ++i)
    if (d.has_output[static_cast<std::size_t>(i)]) d.output[i] = scaler.apply_output(data.output[i]);
  return d;
}

Dataset invert_scaler(const Dataset& data, const Scaler& scaler) {
  require_columns_match(data, scaler);
  Dataset d = data;
  d.inputs = scaler.invert_inputs(data.inputs);
  for (Eigen::Index i = 0; i < d.output.size(); ++i)
    if (d.has_output[static_cast<std::size_t>(i)]) d.output[i] = scaler.invert_output(data.output[i]);
  return d;
}

Vector invert_output(const Vector& normalized, const Scaler& scaler) {
  return (normalized.array() * scaler.output_scale + scaler.output_offset).matrix();
}

std::string to_string(SplitKind kind) { return kind == SplitKind::random ? "random" : "chronological"; }

SplitKind parse_split_kind(const std::string& name) {
  if (name == "chronological") return SplitKind::chronological;
  if (name == "random") return SplitKind::random;
  throw InvalidArgument("unknown split kind '" + name + "'");
}

SplitPlan split(const Dataset& data, SplitKind kind, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidArgument("split fraction must lie in (0, 1)");
  IndexList lab = data.lab_rows();
  if (lab.size() < 2) throw DataError("at least two lab samples are required to split");
  auto by_time = [&](std::size_t a, std::size_t b) {
    return data.time[a] < data.time[b] || (data.time[a] == data.time[b] && a < b);
  };
  std::sort(lab.begin(), lab.end(), by_time);
  const auto n_train = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(lab.size()) - 1e-12));
  if (n_train < 1 || n_train >= lab.size()) throw InvalidArgument("split fraction leaves an empty set");

  if (kind == SplitKind::random) {
    Rng rng(derive_seed(seed, {0x5917}));
    std::shuffle(lab.begin(), lab.end(), rng);
  }
  SplitPlan plan;
  plan.kind = kind;
  plan.seed = seed;
  plan.fraction = fraction;
  plan.train.assign(lab.begin(), lab.begin() + static_cast<std::ptrdiff_t>(n_train));
  plan.test.assign(lab.begin() + static_cast<std::ptrdiff_t>(n_train), lab.end());
  std::sort(plan.train.begin(), plan.train.end(), by_time);
  std::sort(plan.test.begin(), plan.test.end(), by_time);
  return plan;
}

Dataset exclude_ranges(const Dataset& data, const std::vector<std::pair<std::size_t, std::size_t>>& ranges) {
  const std::size_t n = data.rows();
  Mask drop(n, false);
  for (const auto& [start, end] : ranges) {
    if (start < 1 || end > n || start > end) {
      throw DataError("exclusion range [" + std::to_string(start) + ", " + std::to_string(end) +
                      "] is outside rows 1.." + std::to_string(n));
    }
    for (std::size_t i = start - 1; i < end; ++i) drop[i] = true;
  }
  IndexList keep;
  for (std::size_t i = 0; i < n; ++i)
    if (!drop[i]) keep.push_back(i);
  if (keep.empty()) throw DataError("empty dataset after exclusion");
  return select_rows(data, keep);
}

}  // namespace softsensor
