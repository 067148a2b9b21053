#include "civ/dataio/table.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "civ/error.hpp"

namespace civ {

const char* to_string(Task t) { return t == Task::regression ? "regression" : "classification"; }

Task task_from_string(const std::string& s) {
  if (s == "regression") return Task::regression;
  if (s == "classification") return Task::classification;
  throw ConfigError("unknown task '" + s + "'");
}

const char* to_string(ColumnKind k) { return k == ColumnKind::numeric ? "numeric" : "categorical"; }

std::size_t RawTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw SchemaError("unknown column '" + std::string(name) + "'");
}

bool RawTable::has_column(std::string_view name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::vector<std::size_t> RawTable::feature_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] != label) out.push_back(i);
  }
  return out;
}

std::vector<std::string> RawTable::feature_names() const {
  std::vector<std::string> out;
  for (std::size_t i : feature_indices()) out.push_back(columns[i]);
  return out;
}

std::size_t RawTable::missing_cells() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += std::count_if(r.begin(), r.end(), [](const Cell& c) { return is_missing(c); });
  return n;
}

void RawTable::validate(bool require_label) const {
  const bool labeled = has_column(label);
  if (require_label && !labeled) throw SchemaError("label column '" + label + "' not present");
  if (feature_indices().empty()) throw SchemaError("table needs at least one feature column");
  if (kinds.size() != columns.size()) throw SchemaError("column kinds do not match columns");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != columns.size()) {
      throw FormatError("row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                        " cells, expected " + std::to_string(columns.size()));
    }
  }
  if (!labeled || !require_label) return;
  const std::size_t li = label_index();
  if (task == Task::regression && kinds[li] != ColumnKind::numeric) {
    throw SchemaError("regression label '" + label + "' must be numeric");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (is_missing(rows[r][li])) throw SchemaError("row " + std::to_string(r) + " has no label");
  }
}

bool is_missing_marker(std::string_view text) {
  if (text.empty()) return true;
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower == "na" || lower == "nan";
}

namespace {

// RFC-4180 records. Returns false at end of input.
bool next_record(std::string_view text, std::size_t& pos, std::vector<std::string>& out, std::size_t line) {
  out.clear();
  if (pos >= text.size()) return false;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  while (pos < text.size()) {
    const char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field.push_back('"');
          pos += 2;
          continue;
        }
        quoted = false;
        ++pos;
        continue;
      }
      field.push_back(c);
      ++pos;
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
      ++pos;
      continue;
    }
    if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
      field_started = false;
      ++pos;
      continue;
    }
    if (c == '\r' || c == '\n') {
      ++pos;
      if (c == '\r' && pos < text.size() && text[pos] == '\n') ++pos;
      out.push_back(std::move(field));
      return true;
    }
    field.push_back(c);
    field_started = true;
    ++pos;
  }
  if (quoted) throw FormatError("unterminated quoted field near line " + std::to_string(line));
  out.push_back(std::move(field));
  return true;
}

bool parse_number(const std::string& s, double& value) {
  const char* begin = s.c_str();
  char* end = nullptr;
  value = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t') ++end;
  return *end == '\0' && std::isfinite(value);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

RawTable parse_csv(std::string_view text, const SchemaHints& hints) {
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
    text.remove_prefix(3);
  }
  std::size_t pos = 0;
  std::vector<std::string> record;
  if (!next_record(text, pos, record, 1)) throw FormatError("csv: missing header row");
  std::vector<std::string> header;
  for (auto& h : record) header.push_back(trim(h));

  std::vector<std::vector<std::string>> raw;
  std::size_t line = 1;
  while (next_record(text, pos, record, line + 1)) {
    ++line;
    if (record.size() == 1 && trim(record[0]).empty()) continue;  // blank line
    if (record.size() != header.size()) {
      throw FormatError("csv: row " + std::to_string(raw.size() + 1) + " (line " + std::to_string(line) +
                        ") has " + std::to_string(record.size()) + " fields, header has " +
                        std::to_string(header.size()));
    }
    raw.push_back(record);
  }

  if (hints.require_label && std::find(header.begin(), header.end(), hints.label) == header.end()) {
    throw SchemaError("csv: label column '" + hints.label + "' not found");
  }

  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (std::find(hints.drop.begin(), hints.drop.end(), header[c]) == hints.drop.end()) keep.push_back(c);
  }

  RawTable table;
  table.task = hints.task;
  table.label = hints.label;
  for (std::size_t c : keep) table.columns.push_back(header[c]);
  table.rows.assign(raw.size(), std::vector<Cell>(keep.size()));

  for (std::size_t k = 0; k < keep.size(); ++k) {
    const std::size_t c = keep[k];
    const std::string& name = header[c];
    const bool forced_cat =
        std::find(hints.categorical.begin(), hints.categorical.end(), name) != hints.categorical.end();
    bool numeric = !forced_cat;
    std::vector<double> values(raw.size());
    for (std::size_t r = 0; r < raw.size() && numeric; ++r) {
      const std::string cell = trim(raw[r][c]);
      if (is_missing_marker(cell)) continue;
      if (!parse_number(cell, values[r])) numeric = false;
    }
    table.kinds.push_back(numeric ? ColumnKind::numeric : ColumnKind::categorical);
    for (std::size_t r = 0; r < raw.size(); ++r) {
      const std::string cell = trim(raw[r][c]);
      if (is_missing_marker(cell)) continue;
      if (numeric) {
        table.rows[r][k] = values[r];
      } else {
        table.rows[r][k] = cell;
      }
    }
  }
  table.validate(hints.require_label);
  return table;
}

RawTable load_csv(const std::string& path, const SchemaHints& hints) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), hints);
}

FilterResult inference_filter(const RawTable& table, const std::vector<std::string>& selected) {
  std::vector<std::size_t> rows(table.row_count());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return inference_filter(table, selected, rows);
}

FilterResult inference_filter(const RawTable& table, const std::vector<std::string>& selected,
                              const std::vector<std::size_t>& rows) {
  std::vector<std::size_t> cols;
  for (const auto& name : selected) cols.push_back(table.column_index(name));
  FilterResult out;
  for (std::size_t r : rows) {
    const auto& row = table.rows.at(r);
    const bool complete = std::none_of(cols.begin(), cols.end(), [&](std::size_t c) { return is_missing(row[c]); });
    (complete ? out.kept : out.discarded).push_back(r);
  }
  return out;
}

}  // namespace civ
