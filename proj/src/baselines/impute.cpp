#include "civ/baselines/impute.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "civ/error.hpp"

namespace civ {

std::size_t ImputedTable::imputed_cells() const {
  std::size_t n = 0;
  for (const auto& r : imputed) n += static_cast<std::size_t>(std::count(r.begin(), r.end(), 1));
  return n;
}

namespace {

bool missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

// Mode of cells; std::map orders numbers ascending and strings lexicographically, and
// the first maximum wins.
Cell mode_of(const std::vector<const Cell*>& cells) {
  std::map<double, std::size_t> nums;
  std::map<std::string, std::size_t> strs;
  for (const Cell* c : cells) {
    if (const double* d = std::get_if<double>(c)) ++nums[*d];
    if (const std::string* s = std::get_if<std::string>(c)) ++strs[*s];
  }
  Cell best;
  std::size_t count = 0;
  for (const auto& [v, n] : nums) {
    if (n > count) best = v, count = n;
  }
  for (const auto& [v, n] : strs) {
    if (n > count) best = v, count = n;
  }
  return best;
}

std::vector<Cell> column_modes(const RawTable& t, const std::vector<std::size_t>& features) {
  std::vector<Cell> modes(t.columns.size());
  for (std::size_t c : features) {
    std::vector<const Cell*> cells;
    for (const auto& row : t.rows) {
      if (!missing(row[c])) cells.push_back(&row[c]);
    }
    if (cells.empty()) throw ImputationError("column '" + t.columns[c] + "' has no observed values");
    modes[c] = mode_of(cells);
  }
  return modes;
}

ImputedTable start(const RawTable& t) {
  ImputedTable out{t, std::vector<std::vector<std::uint8_t>>(t.rows.size(), std::vector<std::uint8_t>(t.columns.size(), 0))};
  return out;
}

}  // namespace

ImputedTable impute_most_frequent(const RawTable& table) {
  const std::vector<std::size_t> features = table.feature_indices();
  const std::vector<Cell> modes = column_modes(table, features);
  ImputedTable out = start(table);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c : features) {
      if (!missing(table.rows[r][c])) continue;
      out.table.rows[r][c] = modes[c];
      out.imputed[r][c] = 1;
    }
  }
  return out;
}

ImputedTable impute_knn(const RawTable& table, std::size_t k) {
  if (k == 0) throw ConfigError("impute_knn: k must be >= 1");
  const std::vector<std::size_t> features = table.feature_indices();
  const std::vector<Cell> modes = column_modes(table, features);
  std::vector<std::size_t> numeric;
  for (std::size_t c : features) {
    if (table.kinds[c] == ColumnKind::numeric) numeric.push_back(c);
  }
  std::vector<double> lo(table.columns.size(), INFINITY), hi(table.columns.size(), -INFINITY);
  for (const auto& row : table.rows) {
    for (std::size_t c : numeric) {
      if (const double* d = std::get_if<double>(&row[c])) lo[c] = std::min(lo[c], *d), hi[c] = std::max(hi[c], *d);
    }
  }
  auto scaled = [&](const Cell& cell, std::size_t c) {
    const double span = hi[c] - lo[c];
    return span > 0.0 ? (std::get<double>(cell) - lo[c]) / span : 0.0;
  };

  ImputedTable out = start(table);
  const std::size_t n = table.rows.size();
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    if (std::none_of(features.begin(), features.end(), [&](std::size_t c) { return missing(row[c]); })) continue;
    // Distance to every other row, or NaN without shared numeric features.
    std::vector<double> dist(n, NAN);
    for (std::size_t o = 0; o < n; ++o) {
      if (o == r) continue;
      double sum = 0.0;
      std::size_t shared = 0;
      for (std::size_t c : numeric) {
        if (missing(row[c]) || missing(table.rows[o][c])) continue;
        const double d = scaled(row[c], c) - scaled(table.rows[o][c], c);
        sum += d * d;
        ++shared;
      }
      if (shared > 0) dist[o] = std::sqrt(sum * static_cast<double>(numeric.size()) / static_cast<double>(shared));
    }
    for (std::size_t c : features) {
      if (!missing(row[c])) continue;
      std::vector<std::size_t> donors;
      for (std::size_t o = 0; o < n; ++o) {
        if (!std::isnan(dist[o]) && !missing(table.rows[o][c])) donors.push_back(o);
      }
      Cell fill;
      if (donors.empty()) {
        fill = modes[c];
      } else {
        const std::size_t take = std::min(k, donors.size());
        std::partial_sort(donors.begin(), donors.begin() + static_cast<std::ptrdiff_t>(take), donors.end(),
                          [&](std::size_t a, std::size_t b) { return dist[a] != dist[b] ? dist[a] < dist[b] : a < b; });
        donors.resize(take);
        if (table.kinds[c] == ColumnKind::numeric) {
          double s = 0.0;
          for (std::size_t o : donors) s += std::get<double>(table.rows[o][c]);
          fill = s / static_cast<double>(take);
        } else {
          std::vector<const Cell*> cells;
          for (std::size_t o : donors) cells.push_back(&table.rows[o][c]);
          fill = mode_of(cells);
        }
      }
      out.table.rows[r][c] = fill;
      out.imputed[r][c] = 1;
    }
  }
  return out;
}

}  // namespace civ
