#include "civ/dataio/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "civ/error.hpp"
#include "civ/rng.hpp"

namespace civ {

SplitPolicy split_policy_from_string(const std::string& s) {
  if (s == "head") return SplitPolicy::head;
  if (s == "seeded-shuffle" || s == "seeded_shuffle" || s == "shuffle") return SplitPolicy::seeded_shuffle;
  throw ConfigError("unknown split policy '" + s + "'");
}

const char* to_string(SplitPolicy p) { return p == SplitPolicy::head ? "head" : "seeded-shuffle"; }

void SplitSpec::validate() const {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0) || !(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("split fractions must lie in (0, 1)");
  }
  if (validation_fraction + test_fraction >= 1.0) throw ConfigError("split fractions must sum to less than 1");
}

Split split_rows(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  const auto count = [n](double f) { return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9)); };
  const std::size_t nv = count(spec.validation_fraction);
  const std::size_t nt = count(spec.test_fraction);
  if (nv == 0 || nt == 0 || nv + nt >= n) {
    throw ConfigError("split: " + std::to_string(n) + " rows are too few for nonempty pieces");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (spec.policy == SplitPolicy::seeded_shuffle) Rng(spec.seed).shuffle(order);
  Split s;
  s.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nv));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(nv), order.begin() + static_cast<std::ptrdiff_t>(nv + nt));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(nv + nt), order.end());
  for (auto* piece : {&s.train, &s.validation, &s.test}) std::sort(piece->begin(), piece->end());
  return s;
}

}  // namespace civ
