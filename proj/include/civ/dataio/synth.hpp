#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "civ/dataio/table.hpp"

namespace civ {

enum class MissingMechanism { mcar };

// Synthetic tabular generator. Features are noisy mixtures of three shared latent
// factors, so columns are correlated the way real tabular attributes are. Missing
// cells are injected MCAR into the last min(3, numeric_dims) numeric columns.
struct SynthSpec {
  std::size_t rows = 1000;
  std::size_t numeric_dims = 8;
  std::size_t categorical_dims = 2;
  double missing_rate = 0.2;
  MissingMechanism mechanism = MissingMechanism::mcar;
  Task task = Task::regression;
  std::uint64_t seed = 0;

  void validate() const;
};

// Column names are num_<i>, cat_<i>; the label is "target".
RawTable synth_generate(const SynthSpec& spec);

// Names of the columns that receive missing values.
std::vector<std::string> synth_missing_columns(const SynthSpec& spec);

}  // namespace civ
