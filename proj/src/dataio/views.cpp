#include "civ/dataio/views.hpp"

#include <algorithm>
#include <numeric>

#include "civ/error.hpp"

namespace civ {

const char* to_string(ViewKind k) { return k == ViewKind::full ? "full" : "semi"; }

ViewKind view_kind_from_string(const std::string& s) {
  if (s == "full") return ViewKind::full;
  if (s == "semi") return ViewKind::semi;
  throw ConfigError("unknown view kind '" + s + "'");
}

std::size_t DataView::position(std::size_t table_row) const {
  return table_row < row_lookup.size() ? row_lookup[table_row] : npos;
}

DataView make_view(const EncodedDataset& ds, ViewKind kind, const std::vector<std::size_t>& columns,
                   const std::vector<std::size_t>& candidate_rows) {
  DataView v;
  v.kind = kind;
  v.columns = columns;
  v.dims = ds.encoding.dims_of(columns);
  v.x = Matrix(0, v.dims.size());
  v.row_lookup.assign(ds.rows(), DataView::npos);
  std::vector<double> buffer(v.dims.size());
  std::vector<std::size_t> sorted = candidate_rows;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (std::size_t r : sorted) {
    if (r >= ds.rows()) throw ShapeError("view row out of range");
    if (!ds.complete_on(r, columns)) continue;
    for (std::size_t j = 0; j < v.dims.size(); ++j) buffer[j] = ds.features(r, v.dims[j]);
    v.row_lookup[r] = v.rows.size();
    v.rows.push_back(r);
    v.labels.push_back(ds.labels[r]);
    v.x.append_row(buffer);
  }
  return v;
}

std::vector<std::size_t> column_positions(const Encoding& enc, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) out.push_back(enc.column_position(n));
  return out;
}

ViewPair derive_views(const EncodedDataset& ds, const std::vector<std::string>& selected,
                      const std::vector<std::size_t>& row_subset) {
  if (selected.empty()) throw ConfigError("feature selection is empty");
  std::vector<std::size_t> rows = row_subset;
  if (rows.empty()) {
    rows.resize(ds.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  }
  std::vector<std::size_t> all(ds.encoding.columns.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  ViewPair views{make_view(ds, ViewKind::full, all, rows),
                 make_view(ds, ViewKind::semi, column_positions(ds.encoding, selected), rows)};
  if (views.full.empty()) throw WorkflowError("no complete records; cannot train full model");
  return views;
}

}  // namespace civ
