#pragma once

#include <string>
#include <vector>

#include "civ/dataio/table.hpp"

namespace civ {

struct FeatureStat {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::size_t missing_count = 0;
  double missing_rate = 0.0;  // missing_count / rows
  std::size_t cardinality = 0;  // distinct observed values (categorical only)
  double min = 0.0;             // numeric only; 0 when nothing is observed
  double max = 0.0;
};

struct FeatureStats {
  std::size_t rows = 0;
  std::vector<FeatureStat> features;  // input column order, label excluded

  const FeatureStat& at(const std::string& name) const;
  std::size_t with_missing() const;
};

FeatureStats feature_stats(const RawTable& table);

}  // namespace civ
