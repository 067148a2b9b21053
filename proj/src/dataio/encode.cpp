#include "civ/dataio/encode.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "civ/error.hpp"

namespace civ {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char shorter[64];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

namespace {

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  return std::get<std::string>(c);
}

}  // namespace

std::size_t Encoding::column_position(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  throw SchemaError("column '" + name + "' is not encoded");
}

std::vector<std::size_t> Encoding::dims_of(const std::vector<std::size_t>& column_positions) const {
  std::vector<std::size_t> dims;
  for (std::size_t p : column_positions) {
    const auto& col = columns.at(p);
    for (std::size_t d = 0; d < col.width; ++d) dims.push_back(col.offset + d);
  }
  return dims;
}

std::vector<std::string> Encoding::dim_names() const {
  std::vector<std::string> names;
  for (const auto& col : columns) {
    if (col.kind == ColumnKind::numeric) {
      names.push_back(col.name);
    } else {
      for (const auto& v : col.categories) names.push_back(col.name + "=" + v);
    }
  }
  return names;
}

std::vector<std::string> Encoding::column_names() const {
  std::vector<std::string> names;
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

double Encoding::scale_label(double raw) const {
  const double span = label_max - label_min;
  return span > 0.0 ? (raw - label_min) / span : 0.0;
}

double Encoding::unscale_label(double scaled) const { return label_min + scaled * (label_max - label_min); }

bool EncodedDataset::complete_on(std::size_t row, const std::vector<std::size_t>& column_positions) const {
  return std::none_of(column_positions.begin(), column_positions.end(),
                      [&](std::size_t p) { return is_missing(row, p); });
}

Encoding fit_encoding(const RawTable& table, const std::vector<std::string>& selected) {
  table.validate();
  Encoding enc;
  enc.task = table.task;
  std::vector<std::string> names = selected.empty() ? table.feature_names() : selected;
  for (const auto& name : names) {
    if (name == table.label) throw SchemaError("label column '" + name + "' cannot be a feature");
    const std::size_t c = table.column_index(name);
    ColumnEncoding col;
    col.name = name;
    col.kind = table.kinds[c];
    col.offset = enc.width;
    if (col.kind == ColumnKind::numeric) {
      bool seen = false;
      for (const auto& row : table.rows) {
        if (is_missing(row[c])) continue;
        const double v = std::get<double>(row[c]);
        col.min = seen ? std::min(col.min, v) : v;
        col.max = seen ? std::max(col.max, v) : v;
        seen = true;
      }
      col.width = 1;
    } else {
      std::set<std::string> distinct;
      for (const auto& row : table.rows) {
        if (!is_missing(row[c])) distinct.insert(std::get<std::string>(row[c]));
      }
      col.categories.assign(distinct.begin(), distinct.end());
      col.width = col.categories.size();
    }
    enc.width += col.width;
    enc.columns.push_back(std::move(col));
  }

  const std::size_t li = table.label_index();
  if (table.task == Task::regression) {
    bool seen = false;
    for (const auto& row : table.rows) {
      const double v = std::get<double>(row[li]);
      enc.label_min = seen ? std::min(enc.label_min, v) : v;
      enc.label_max = seen ? std::max(enc.label_max, v) : v;
      seen = true;
    }
  } else {
    if (table.kinds[li] == ColumnKind::numeric) {
      std::set<double> distinct;
      for (const auto& row : table.rows) distinct.insert(std::get<double>(row[li]));
      for (double v : distinct) enc.classes.push_back(format_number(v));
    } else {
      std::set<std::string> distinct;
      for (const auto& row : table.rows) distinct.insert(std::get<std::string>(row[li]));
      enc.classes.assign(distinct.begin(), distinct.end());
    }
    if (enc.classes.size() < 2) throw SchemaError("classification label needs at least two classes");
  }
  return enc;
}

double encode_label(const Encoding& encoding, const Cell& cell) {
  if (is_missing(cell)) throw SchemaError("missing label");
  if (encoding.task == Task::regression) {
    const auto* v = std::get_if<double>(&cell);
    if (!v) throw SchemaError("non-numeric regression label");
    return encoding.scale_label(*v);
  }
  const std::string text = cell_text(cell);
  const auto it = std::find(encoding.classes.begin(), encoding.classes.end(), text);
  if (it == encoding.classes.end()) throw SchemaError("unknown class '" + text + "'");
  return static_cast<double>(it - encoding.classes.begin());
}

EncodedDataset apply_encoding(const Encoding& encoding, const RawTable& table) {
  EncodedDataset ds;
  ds.encoding = encoding;
  const std::size_t n = table.row_count();
  const std::size_t ncols = encoding.columns.size();
  ds.features = Matrix(n, encoding.width);
  ds.missing.assign(n * ncols, 0);
  ds.labels.resize(n);

  std::vector<std::size_t> table_cols;
  for (const auto& col : encoding.columns) {
    const std::size_t c = table.column_index(col.name);
    if (table.kinds[c] != col.kind) throw SchemaError("column '" + col.name + "' changed kind");
    table_cols.push_back(c);
  }
  const bool has_label = table.has_column(table.label);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    for (std::size_t p = 0; p < ncols; ++p) {
      const auto& col = encoding.columns[p];
      const Cell& cell = row[table_cols[p]];
      if (is_missing(cell)) {
        ds.missing[r * ncols + p] = 1;
        continue;
      }
      if (col.kind == ColumnKind::numeric) {
        const double span = col.max - col.min;
        ds.features(r, col.offset) = span > 0.0 ? (std::get<double>(cell) - col.min) / span : 0.0;
      } else {
        const auto& v = std::get<std::string>(cell);
        const auto it = std::lower_bound(col.categories.begin(), col.categories.end(), v);
        if (it != col.categories.end() && *it == v) {
          ds.features(r, col.offset + static_cast<std::size_t>(it - col.categories.begin())) = 1.0;
        }
      }
    }
    if (has_label && !is_missing(row[table.label_index()])) {
      ds.labels[r] = encode_label(encoding, row[table.label_index()]);
    }
  }
  return ds;
}

EncodedDataset encode(const RawTable& table, const std::vector<std::string>& selected) {
  return apply_encoding(fit_encoding(table, selected), table);
}

}  // namespace civ
