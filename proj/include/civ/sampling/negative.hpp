#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "civ/dataio/views.hpp"

namespace civ {

enum class NegativeStrategy { random, hard, manual };

const char* to_string(NegativeStrategy s);
NegativeStrategy negative_strategy_from_string(const std::string& s);

struct NegativeRef {
  ViewKind view = ViewKind::semi;
  std::size_t row = 0;  // table row

  friend auto operator<=>(const NegativeRef&, const NegativeRef&) = default;
};

struct NegativeEntry {
  NegativeRef ref;
  NegativeStrategy provenance = NegativeStrategy::manual;
};

// User-curated negatives, in insertion order, without duplicate (view, row) pairs.
class NegativeCollection {
 public:
  // Returns false when the entry is already present.
  bool add(const NegativeEntry& entry);
  bool remove(const NegativeRef& ref);
  bool contains(const NegativeRef& ref) const { return index_.count(ref) != 0; }
  void clear();

  const std::vector<NegativeEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t count(ViewKind view) const;

 private:
  std::vector<NegativeEntry> entries_;
  std::set<NegativeRef> index_;
};

struct NegativeCandidate {
  NegativeRef ref;
  std::span<const double> x;  // representation used by the hard strategy
  double label = 0.0;
};

struct SamplingStrategy {
  NegativeStrategy kind = NegativeStrategy::random;
  double rate = 1.0;  // in (0, 1]

  void validate() const;
};

struct NegativeSelection {
  std::vector<std::size_t> picked;  // indices into the candidate list
  std::vector<std::size_t> anchors;  // candidate indices used as anchors (hard only)
  std::vector<double> scores;        // score_n per candidate (hard only)
};

// floor(rate * n) picks. Random: seeded uniform without replacement, returned in
// candidate order. Hard: one seeded random anchor, then the top picks by score_n,
// ties to the lower (row, view).
NegativeSelection select_negatives(std::span<const NegativeCandidate> candidates, const SamplingStrategy& strategy,
                                   std::uint64_t seed);

struct NegativeDelta {
  std::vector<NegativeEntry> added;
  std::size_t selected = 0;
  std::size_t duplicates = 0;
  std::vector<std::size_t> anchors;  // table rows of the anchors
  std::vector<std::string> warnings;
};

NegativeDelta sample_negatives(NegativeCollection& collection, std::span<const NegativeCandidate> candidates,
                               const SamplingStrategy& strategy, std::uint64_t seed);

std::size_t pick_count(double rate, std::size_t n);

}  // namespace civ
