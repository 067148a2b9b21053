#include "civ/dataio/stats.hpp"

#include <algorithm>
#include <set>

#include "civ/error.hpp"

namespace civ {

const FeatureStat& FeatureStats::at(const std::string& name) const {
  for (const auto& f : features) {
    if (f.name == name) return f;
  }
  throw NotFoundError("no feature '" + name + "'");
}

std::size_t FeatureStats::with_missing() const {
  return static_cast<std::size_t>(
      std::count_if(features.begin(), features.end(), [](const FeatureStat& f) { return f.missing_count > 0; }));
}

FeatureStats feature_stats(const RawTable& table) {
  FeatureStats stats;
  stats.rows = table.row_count();
  for (std::size_t c : table.feature_indices()) {
    FeatureStat f;
    f.name = table.columns[c];
    f.kind = table.kinds[c];
    std::set<std::string> distinct;
    bool seen = false;
    for (const auto& row : table.rows) {
      const Cell& cell = row[c];
      if (is_missing(cell)) {
        ++f.missing_count;
        continue;
      }
      if (f.kind == ColumnKind::categorical) {
        distinct.insert(std::get<std::string>(cell));
      } else {
        const double v = std::get<double>(cell);
        f.min = seen ? std::min(f.min, v) : v;
        f.max = seen ? std::max(f.max, v) : v;
        seen = true;
      }
    }
    f.cardinality = distinct.size();
    f.missing_rate = stats.rows == 0 ? 0.0 : static_cast<double>(f.missing_count) / static_cast<double>(stats.rows);
    stats.features.push_back(std::move(f));
  }
  return stats;
}

}  // namespace civ
