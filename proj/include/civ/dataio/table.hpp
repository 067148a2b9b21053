#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace civ {

enum class Task { regression, classification };
enum class ColumnKind { numeric, categorical };

const char* to_string(Task t);
Task task_from_string(const std::string& s);
const char* to_string(ColumnKind k);

// monostate marks a missing cell.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

struct RawTable {
  std::vector<std::string> columns;
  std::vector<ColumnKind> kinds;  // one per column, label included
  std::vector<std::vector<Cell>> rows;
  Task task = Task::regression;
  std::string label;

  std::size_t row_count() const { return rows.size(); }
  std::size_t column_index(std::string_view name) const;  // throws SchemaError
  bool has_column(std::string_view name) const;
  std::size_t label_index() const { return column_index(label); }
  // Column indices of every non-label column, in file order.
  std::vector<std::size_t> feature_indices() const;
  std::vector<std::string> feature_names() const;
  std::size_t missing_cells() const;

  // Checks rectangularity, >= 1 feature column and, when `require_label`, that the
  // label column exists and is complete.
  void validate(bool require_label = true) const;
};

struct SchemaHints {
  std::string label;
  Task task = Task::regression;
  std::vector<std::string> categorical;  // forced categorical even when numeric-looking
  std::vector<std::string> drop;         // columns removed at load
  bool require_label = true;             // false for unlabeled inference files
};

// Case-insensitive "", "NA", "NaN".
bool is_missing_marker(std::string_view text);

RawTable parse_csv(std::string_view text, const SchemaHints& hints);
RawTable load_csv(const std::string& path, const SchemaHints& hints);

// Rows (indices into `table`) complete on the named columns, and the rest.
struct FilterResult {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> discarded;
};
FilterResult inference_filter(const RawTable& table, const std::vector<std::string>& selected);
FilterResult inference_filter(const RawTable& table, const std::vector<std::string>& selected,
                              const std::vector<std::size_t>& rows);

}  // namespace civ
