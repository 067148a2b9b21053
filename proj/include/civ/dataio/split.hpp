#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace civ {

enum class SplitPolicy { head, seeded_shuffle };

SplitPolicy split_policy_from_string(const std::string& s);
const char* to_string(SplitPolicy p);

struct SplitSpec {
  double validation_fraction = 0.10;
  double test_fraction = 0.10;
  SplitPolicy policy = SplitPolicy::head;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Piece sizes are floor(fraction * n). Under the head policy validation rows come first,
// then test rows, then training rows.
Split split_rows(std::size_t n, const SplitSpec& spec);

}  // namespace civ
