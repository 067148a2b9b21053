#include "civ/sampling/negative.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "civ/error.hpp"
#include "civ/rng.hpp"
#include "civ/sampling/positive.hpp"

namespace civ {

const char* to_string(NegativeStrategy s) {
  switch (s) {
    case NegativeStrategy::random: return "random";
    case NegativeStrategy::hard: return "hard";
    case NegativeStrategy::manual: return "manual";
  }
  return "manual";
}

NegativeStrategy negative_strategy_from_string(const std::string& s) {
  if (s == "random") return NegativeStrategy::random;
  if (s == "hard") return NegativeStrategy::hard;
  if (s == "manual") return NegativeStrategy::manual;
  throw ConfigError("unknown negative strategy '" + s + "'");
}

bool NegativeCollection::add(const NegativeEntry& entry) {
  if (!index_.insert(entry.ref).second) return false;
  entries_.push_back(entry);
  return true;
}

bool NegativeCollection::remove(const NegativeRef& ref) {
  if (index_.erase(ref) == 0) return false;
  entries_.erase(std::find_if(entries_.begin(), entries_.end(), [&](const NegativeEntry& e) { return e.ref == ref; }));
  return true;
}

void NegativeCollection::clear() {
  entries_.clear();
  index_.clear();
}

std::size_t NegativeCollection::count(ViewKind view) const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [view](const NegativeEntry& e) { return e.ref.view == view; }));
}

void SamplingStrategy::validate() const {
  if (!(rate > 0.0 && rate <= 1.0)) throw ConfigError("sampling rate must lie in (0, 1]");
}

std::size_t pick_count(double rate, std::size_t n) {
  // The epsilon absorbs representation error such as 0.3 * 10 = 3.0000000000000004
  // or 0.29 * 100 = 28.999999999999996.
  return std::min(n, static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 1e-9)));
}

NegativeSelection select_negatives(std::span<const NegativeCandidate> candidates, const SamplingStrategy& strategy,
                                   std::uint64_t seed) {
  strategy.validate();
  NegativeSelection sel;
  const std::size_t n = candidates.size();
  if (n == 0) return sel;
  const std::size_t k = pick_count(strategy.rate, n);
  Rng rng(seed);

  if (strategy.kind == NegativeStrategy::hard) {
    const std::size_t anchor = static_cast<std::size_t>(rng.below(n));
    sel.anchors.push_back(anchor);
    std::vector<double> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = candidates[i].label;
    const double a_label = candidates[anchor].label;
    double norm = 0.0;
    for (double l : labels) norm = std::max(norm, std::abs(a_label - l));
    sel.scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      sel.scores[i] = negative_score(candidates[anchor].x, candidates[i].x, a_label, labels[i], norm);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (sel.scores[a] != sel.scores[b]) return sel.scores[a] > sel.scores[b];
      const auto& ra = candidates[a].ref;
      const auto& rb = candidates[b].ref;
      if (ra.row != rb.row) return ra.row < rb.row;
      return ra.view < rb.view;
    });
    sel.picked.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    return sel;
  }

  // Random and manual: manual at rate 1 takes everything, otherwise behaves as random.
  std::vector<std::size_t> perm = rng.permutation(n);
  perm.resize(k);
  std::sort(perm.begin(), perm.end());
  sel.picked = std::move(perm);
  return sel;
}

NegativeDelta sample_negatives(NegativeCollection& collection, std::span<const NegativeCandidate> candidates,
                               const SamplingStrategy& strategy, std::uint64_t seed) {
  NegativeDelta delta;
  if (candidates.empty()) {
    delta.warnings.push_back("no candidate rows; negative collection unchanged");
    return delta;
  }
  const NegativeSelection sel = select_negatives(candidates, strategy, seed);
  if (sel.picked.empty()) delta.warnings.push_back("rate selects zero of the candidate rows");
  for (std::size_t a : sel.anchors) delta.anchors.push_back(candidates[a].ref.row);
  delta.selected = sel.picked.size();
  for (std::size_t i : sel.picked) {
    const NegativeEntry entry{candidates[i].ref, strategy.kind};
    if (collection.add(entry)) {
      delta.added.push_back(entry);
    } else {
      ++delta.duplicates;
    }
  }
  return delta;
}

}  // namespace civ
