#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "civ/dataio/table.hpp"
#include "civ/numcore/matrix.hpp"

namespace civ {

// How one original feature maps onto encoded dims.
struct ColumnEncoding {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  double min = 0.0;  // numeric: observed range used for min-max scaling
  double max = 0.0;
  std::vector<std::string> categories;  // categorical: sorted observed values
  std::size_t offset = 0;               // first encoded dim
  std::size_t width = 1;
};

// Fitted feature and label transform. Numeric values map to (v - min) / (max - min),
// constant columns map to 0. Categorical values become indicator dims; values unseen
// at fit time encode as all zeros.
struct Encoding {
  Task task = Task::regression;
  std::vector<ColumnEncoding> columns;
  std::size_t width = 0;
  double label_min = 0.0;
  double label_max = 1.0;
  std::vector<std::string> classes;

  std::size_t column_position(const std::string& name) const;  // throws SchemaError
  std::vector<std::size_t> dims_of(const std::vector<std::size_t>& column_positions) const;
  std::vector<std::string> dim_names() const;
  std::vector<std::string> column_names() const;

  double scale_label(double raw) const;
  double unscale_label(double scaled) const;
  std::size_t class_count() const { return classes.size(); }
};

struct EncodedDataset {
  Encoding encoding;
  Matrix features;               // one row per table row; missing cells encode as 0
  std::vector<double> labels;    // scaled to [0,1] (regression) or class index
  std::vector<std::uint8_t> missing;  // rows x encoding.columns, 1 = missing

  std::size_t rows() const { return features.rows(); }
  bool is_missing(std::size_t row, std::size_t column_position) const {
    return missing[row * encoding.columns.size() + column_position] != 0;
  }
  bool complete_on(std::size_t row, const std::vector<std::size_t>& column_positions) const;
};

std::string format_number(double v);

// Fits on every row of `table`. An empty selection means every feature column.
Encoding fit_encoding(const RawTable& table, const std::vector<std::string>& selected = {});
EncodedDataset apply_encoding(const Encoding& encoding, const RawTable& table);
EncodedDataset encode(const RawTable& table, const std::vector<std::string>& selected = {});

// Class index or scaled label of a single label cell.
double encode_label(const Encoding& encoding, const Cell& cell);

}  // namespace civ
