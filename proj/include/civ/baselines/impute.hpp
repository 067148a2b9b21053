#pragma once

#include <cstdint>
#include <vector>

#include "civ/dataio/table.hpp"

namespace civ {

struct ImputedTable {
  RawTable table;
  std::vector<std::vector<std::uint8_t>> imputed;  // rows x columns, 1 = filled in

  std::size_t imputed_cells() const;
};

// Column mode of the observed values; ties go to the smallest number, or the
// lexicographically smallest string. The label column is never touched.
ImputedTable impute_most_frequent(const RawTable& table);

// Each missing cell takes the mean (numeric) or mode (categorical) of its k nearest donor
// rows that observe the column. Distance is Euclidean over min-max-scaled numeric
// features observed in both rows, rescaled by (numeric features / shared features);
// distance ties go to the lower row. A cell with no donor sharing any numeric feature
// falls back to the column mode.
ImputedTable impute_knn(const RawTable& table, std::size_t k = 5);

}  // namespace civ
