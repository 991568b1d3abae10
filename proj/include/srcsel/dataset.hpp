#pragma once

// Tabular data model, CSV ingestion and target/source splitting.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "srcsel/csv.hpp"
#include "srcsel/error.hpp"

namespace srcsel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowIndex = std::size_t;

/// A per-row metadata column. Columns whose every cell parses as a finite
/// number are numeric; others keep only their text.
struct MetaColumn {
  std::string name;
  std::vector<std::string> text;
  std::vector<double> numeric;  // empty unless is_numeric
  bool is_numeric = false;

  static MetaColumn from_numbers(std::string name, std::vector<double> values) {
    MetaColumn col;
    col.name = std::move(name);
    col.text.reserve(values.size());
    for (double v : values) col.text.push_back(csv::format_double(v));
    col.numeric = std::move(values);
    col.is_numeric = true;
    return col;
  }

  static MetaColumn from_text(std::string name, std::vector<std::string> values) {
    MetaColumn col;
    col.name = std::move(name);
    std::vector<double> parsed;
    parsed.reserve(values.size());
    bool numeric = true;
    for (const auto& v : values) {
      auto d = csv::parse_double(v);
      if (!d || !std::isfinite(*d)) {
        numeric = false;
        break;
      }
      parsed.push_back(*d);
    }
    col.text = std::move(values);
    if (numeric) {
      col.numeric = std::move(parsed);
      col.is_numeric = true;
    }
    return col;
  }

  std::size_t size() const { return text.size(); }
};

struct Dataset {
  Matrix features;  // n x p
  Vector response;  // n
  std::vector<std::string> feature_names;
  std::string response_name = "y";
  std::vector<MetaColumn> meta;
  std::vector<RowIndex> origin;  // row number in the originating file/dataset

  std::size_t rows() const { return static_cast<std::size_t>(response.size()); }
  std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }

  bool has_meta(std::string_view name) const {
    return std::any_of(meta.begin(), meta.end(), [&](const auto& c) { return c.name == name; });
  }

  const MetaColumn& meta_column(std::string_view name) const {
    for (const auto& c : meta) {
      if (c.name == name) return c;
    }
    throw DataError("unknown metadata column '" + std::string(name) + "'");
  }

  const std::vector<double>& meta_numeric(std::string_view name) const {
    const auto& col = meta_column(name);
    if (!col.is_numeric) {
      throw DataError("metadata column '" + col.name + "' is not numeric");
    }
    return col.numeric;
  }

  /// Throws DataError when a structural invariant is broken.
  void validate() const {
    const auto n = rows();
    if (static_cast<std::size_t>(features.rows()) != n) {
      throw DataError("feature row count does not match response length");
    }
    if (feature_names.size() != cols()) {
      throw DataError("feature name count does not match feature columns");
    }
    if (!origin.empty() && origin.size() != n) {
      throw DataError("origin index length does not match row count");
    }
    for (const auto& c : meta) {
      if (c.size() != n) throw DataError("metadata column '" + c.name + "' has wrong length");
    }
    if (!features.allFinite() || !response.allFinite()) {
      throw DataError("dataset contains non-finite values");
    }
  }

  /// Rows in the given order (duplicates allowed).
  Dataset select(std::span<const RowIndex> idx) const {
    Dataset out;
    const auto m = static_cast<Eigen::Index>(idx.size());
    out.features.resize(m, features.cols());
    out.response.resize(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto src = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]);
      if (src >= features.rows()) throw DataError("row index out of range");
      out.features.row(r) = features.row(src);
      out.response(r) = response(src);
    }
    out.feature_names = feature_names;
    out.response_name = response_name;
    for (const auto& c : meta) {
      MetaColumn col;
      col.name = c.name;
      col.is_numeric = c.is_numeric;
      col.text.reserve(idx.size());
      for (auto i : idx) col.text.push_back(c.text[i]);
      if (c.is_numeric) {
        col.numeric.reserve(idx.size());
        for (auto i : idx) col.numeric.push_back(c.numeric[i]);
      }
      out.meta.push_back(std::move(col));
    }
    out.origin.reserve(idx.size());
    for (auto i : idx) out.origin.push_back(origin.empty() ? i : origin[i]);
    return out;
  }
};

inline bool operator==(const MetaColumn& a, const MetaColumn& b) {
  return a.name == b.name && a.text == b.text && a.is_numeric == b.is_numeric &&
         a.numeric == b.numeric;
}

inline bool operator==(const Dataset& a, const Dataset& b) {
  return a.features.rows() == b.features.rows() && a.features.cols() == b.features.cols() &&
         a.features == b.features && a.response == b.response &&
         a.feature_names == b.feature_names && a.response_name == b.response_name &&
         a.meta == b.meta && a.origin == b.origin;
}

struct CsvOptions {
  std::string response_column;
  std::vector<std::string> meta_columns;
  /// Columns read from the file but discarded entirely.
  std::vector<std::string> ignore_columns;
  /// Drop rows with an empty or non-numeric feature/response cell instead of
  /// failing. Off by default.
  bool drop_incomplete_rows = false;
  /// Numeric metadata columns are also appended to the feature matrix.
  bool meta_as_features = false;
};

struct LoadReport {
  std::size_t dropped_rows = 0;
};

/// Loads a headered CSV. Every column that is neither the response, a
/// metadata column nor ignored must be numeric.
inline Dataset load_csv(const std::string& path, const CsvOptions& opts,
                        LoadReport* report = nullptr) {
  const csv::Table table = csv::read_file(path);
  const auto& header = table.header;

  auto find = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("column '" + name + "' not found in " + path);
    return static_cast<std::size_t>(it - header.begin());
  };
  {
    std::set<std::string> seen;
    for (const auto& h : header) {
      if (!seen.insert(h).second) throw DataError("duplicate column '" + h + "' in " + path);
    }
  }

  if (opts.response_column.empty()) throw DataError("no response column named");
  const std::size_t response_col = find(opts.response_column);
  std::vector<std::size_t> meta_cols;
  for (const auto& m : opts.meta_columns) meta_cols.push_back(find(m));
  std::unordered_set<std::size_t> skip(meta_cols.begin(), meta_cols.end());
  skip.insert(response_col);
  for (const auto& c : opts.ignore_columns) skip.insert(find(c));

  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!skip.count(c)) feature_cols.push_back(c);
  }

  std::vector<std::vector<double>> rows;
  std::vector<double> response;
  std::vector<std::vector<std::string>> meta_text(meta_cols.size());
  std::vector<RowIndex> origin;
  std::size_t dropped = 0;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& rec = table.rows[r];
    const std::string where = "line " + std::to_string(rec.line) + " (row " + std::to_string(r + 1) + ")";
    if (rec.fields.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(rec.fields.size()));
    }
    auto numeric_cell = [&](std::size_t c) -> std::optional<double> {
      const auto& cell = rec.fields[c];
      auto v = csv::parse_double(cell);
      if (!v) {
        if (opts.drop_incomplete_rows) return std::nullopt;
        const char* what = csv::trim(cell).empty() ? "empty cell" : "unparseable value";
        throw DataError(where + ", column '" + header[c] + "': " + what + " '" + cell + "'");
      }
      if (!std::isfinite(*v)) {
        if (opts.drop_incomplete_rows) return std::nullopt;
        throw DataError(where + ", column '" + header[c] + "': non-finite value '" + cell + "'");
      }
      return v;
    };

    std::vector<double> row;
    row.reserve(feature_cols.size());
    bool ok = true;
    for (auto c : feature_cols) {
      auto v = numeric_cell(c);
      if (!v) {
        ok = false;
        break;
      }
      row.push_back(*v);
    }
    std::optional<double> y;
    if (ok) {
      y = numeric_cell(response_col);
      ok = y.has_value();
    }
    if (ok) {
      for (auto c : meta_cols) {
        if (csv::trim(rec.fields[c]).empty()) {
          if (!opts.drop_incomplete_rows) {
            throw DataError(where + ", column '" + header[c] + "': empty cell ''");
          }
          ok = false;
          break;
        }
      }
    }
    if (!ok) {
      ++dropped;
      continue;
    }
    rows.push_back(std::move(row));
    response.push_back(*y);
    for (std::size_t m = 0; m < meta_cols.size(); ++m) {
      meta_text[m].push_back(std::string(csv::trim(rec.fields[meta_cols[m]])));
    }
    origin.push_back(r);
  }

  Dataset ds;
  ds.response_name = opts.response_column;
  for (auto c : feature_cols) ds.feature_names.push_back(header[c]);
  for (std::size_t m = 0; m < meta_cols.size(); ++m) {
    ds.meta.push_back(MetaColumn::from_text(header[meta_cols[m]], std::move(meta_text[m])));
  }

  std::vector<const MetaColumn*> extra;
  if (opts.meta_as_features) {
    for (const auto& c : ds.meta) {
      if (!c.is_numeric) {
        throw DataError("metadata column '" + c.name + "' is not numeric and cannot be a feature");
      }
      extra.push_back(&c);
      ds.feature_names.push_back(c.name);
    }
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  ds.features.resize(n, static_cast<Eigen::Index>(ds.feature_names.size()));
  ds.response.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < row.size(); ++j) ds.features(i, static_cast<Eigen::Index>(j)) = row[j];
    for (std::size_t e = 0; e < extra.size(); ++e) {
      ds.features(i, static_cast<Eigen::Index>(row.size() + e)) = extra[e]->numeric[static_cast<std::size_t>(i)];
    }
    ds.response(i) = response[static_cast<std::size_t>(i)];
  }
  ds.origin = std::move(origin);
  ds.validate();
  if (report) report->dropped_rows = dropped;
  return ds;
}

/// Writes features, response and metadata with a header row. Extra columns
/// (e.g. partition labels) may be appended.
inline void write_csv(const std::string& path, const Dataset& data,
                      const std::vector<std::pair<std::string, std::vector<std::string>>>& extra = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  std::vector<std::string> header = data.feature_names;
  header.push_back(data.response_name);
  for (const auto& m : data.meta) header.push_back(m.name);
  for (const auto& e : extra) header.push_back(e.first);
  csv::write_row(out, header);
  std::vector<std::string> fields;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    fields.clear();
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
      fields.push_back(csv::format_double(data.features(r, j)));
    }
    fields.push_back(csv::format_double(data.response(r)));
    for (const auto& m : data.meta) fields.push_back(m.text[i]);
    for (const auto& e : extra) fields.push_back(e.second.at(i));
    csv::write_row(out, fields);
  }
}

// ---------------------------------------------------------------------------
// Target / source splitting

enum class SplitKind { metadata_range, metadata_equality, row_index_list };

/// lower < value <= upper. Missing bounds are unbounded.
struct RangeCondition {
  std::string column;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double v) const { return v > lower && v <= upper; }
};

/// Defines which rows form the target. Range conditions are combined with AND
/// so a latitude/longitude box is two conditions.
struct SplitSpec {
  SplitKind kind = SplitKind::metadata_range;
  std::vector<RangeCondition> ranges;
  std::string column;  // metadata_equality
  std::string value;   // metadata_equality; compared numerically when both parse
  std::vector<RowIndex> rows;  // row_index_list

  static SplitSpec range(std::string column, double lower, double upper) {
    SplitSpec s;
    s.kind = SplitKind::metadata_range;
    s.ranges.push_back({std::move(column), lower, upper});
    return s;
  }
  static SplitSpec equality(std::string column, std::string value) {
    SplitSpec s;
    s.kind = SplitKind::metadata_equality;
    s.column = std::move(column);
    s.value = std::move(value);
    return s;
  }
  static SplitSpec row_list(std::vector<RowIndex> rows) {
    SplitSpec s;
    s.kind = SplitKind::row_index_list;
    s.rows = std::move(rows);
    return s;
  }
};

struct SplitResult {
  Dataset target;
  Dataset source;
  std::vector<RowIndex> target_rows;  // indices into the input dataset
  std::vector<RowIndex> source_rows;
};

/// Membership mask of the target rows.
inline std::vector<bool> target_mask(const Dataset& data, const SplitSpec& spec) {
  const auto n = data.rows();
  std::vector<bool> mask(n, false);
  switch (spec.kind) {
    case SplitKind::metadata_range: {
      if (spec.ranges.empty()) throw DataError("range split needs at least one condition");
      std::fill(mask.begin(), mask.end(), true);
      for (const auto& cond : spec.ranges) {
        if (!(cond.lower < cond.upper)) {
          throw DataError("range split on '" + cond.column + "' has lower >= upper");
        }
        const auto& values = data.meta_numeric(cond.column);
        for (std::size_t i = 0; i < n; ++i) mask[i] = mask[i] && cond.contains(values[i]);
      }
      break;
    }
    case SplitKind::metadata_equality: {
      const auto& col = data.meta_column(spec.column);
      const auto wanted = csv::parse_double(spec.value);
      for (std::size_t i = 0; i < n; ++i) {
        if (col.is_numeric && wanted) {
          mask[i] = col.numeric[i] == *wanted;
        } else {
          mask[i] = col.text[i] == spec.value;
        }
      }
      break;
    }
    case SplitKind::row_index_list: {
      for (auto r : spec.rows) {
        if (r >= n) throw DataError("target row index " + std::to_string(r) + " out of range");
        if (mask[r]) throw DataError("target row index " + std::to_string(r) + " listed twice");
        mask[r] = true;
      }
      break;
    }
  }
  return mask;
}

inline SplitResult split_target_source(const Dataset& data, const SplitSpec& spec) {
  const auto mask = target_mask(data, spec);
  SplitResult out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    (mask[i] ? out.target_rows : out.source_rows).push_back(i);
  }
  if (out.target_rows.empty()) throw DataError("split produced an empty target");
  if (out.source_rows.empty()) throw DataError("split produced an empty source");
  out.target = data.select(out.target_rows);
  out.source = data.select(out.source_rows);
  return out;
}

}  // namespace srcsel
