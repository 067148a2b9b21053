#pragma once

#include <limits>
#include <string>
#include <vector>

#include "civ/dataio/encode.hpp"

namespace civ {

enum class ViewKind { full, semi };

const char* to_string(ViewKind k);
ViewKind view_kind_from_string(const std::string& s);

// Rows of an encoded dataset restricted to a set of original columns. Rows are
// stable table row indices; x holds their encoded values on `dims` only.
struct DataView {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  ViewKind kind = ViewKind::full;
  std::vector<std::size_t> columns;  // positions in Encoding::columns
  std::vector<std::size_t> dims;     // encoded dims of those columns
  std::vector<std::size_t> rows;
  Matrix x;
  std::vector<double> labels;

  std::size_t size() const { return rows.size(); }
  std::size_t width() const { return dims.size(); }
  bool empty() const { return rows.empty(); }
  // Position of a table row inside the view, or npos.
  std::size_t position(std::size_t table_row) const;
  bool contains(std::size_t table_row) const { return position(table_row) != npos; }

  // Internal index for position(); rebuilt by make_view.
  std::vector<std::size_t> row_lookup;
};

// Rows from `candidate_rows` complete on `columns`, materialized on their dims in
// ascending row order.
DataView make_view(const EncodedDataset& ds, ViewKind kind, const std::vector<std::size_t>& columns,
                   const std::vector<std::size_t>& candidate_rows);

struct ViewPair {
  DataView full;
  DataView semi;
};

std::vector<std::size_t> column_positions(const Encoding& enc, const std::vector<std::string>& names);

// Full view: complete on every encoded column. Semi view: complete on `selected`.
// Throws WorkflowError when the full view is empty. An empty row subset means all rows.
ViewPair derive_views(const EncodedDataset& ds, const std::vector<std::string>& selected,
                      const std::vector<std::size_t>& row_subset = {});

}  // namespace civ
