#include "civ/sampling/bins.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "civ/error.hpp"

namespace civ {

std::size_t label_bin(double label, double lower, double upper, std::size_t k) {
  if (upper <= lower) return 0;
  const double t = (label - lower) / (upper - lower) * static_cast<double>(k);
  if (t <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(std::floor(t)), k - 1);
}

namespace {

std::vector<LabelBin> make_bins(const DataView& view, double lower, double upper, std::size_t k) {
  std::vector<LabelBin> bins(k);
  const double width = (upper - lower) / static_cast<double>(k);
  for (std::size_t b = 0; b < k; ++b) {
    bins[b].lower = lower + width * static_cast<double>(b);
    bins[b].upper = b + 1 == k ? upper : lower + width * static_cast<double>(b + 1);
    bins[b].feature_means.assign(view.width(), 0.0);
  }
  for (std::size_t i = 0; i < view.size(); ++i) {
    const double l = view.labels[i];
    auto& bin = bins[label_bin(l, lower, upper, k)];
    bin.min_label = bin.count == 0 ? l : std::min(bin.min_label, l);
    bin.max_label = bin.count == 0 ? l : std::max(bin.max_label, l);
    ++bin.count;
    for (std::size_t d = 0; d < view.width(); ++d) bin.feature_means[d] += view.x(i, d);
  }
  for (auto& bin : bins) {
    if (bin.count == 0) continue;
    for (double& m : bin.feature_means) m /= static_cast<double>(bin.count);
  }
  return bins;
}

}  // namespace

BinSummary bin_summary(const PositiveMapping& mapping, const DataView& semi, const DataView& full, std::size_t k) {
  if (k < 2) throw ConfigError("bin_summary: K must be >= 2");
  BinSummary s;
  s.k = k;
  bool seen = false;
  std::set<double> distinct;
  for (const DataView* v : {&semi, &full}) {
    for (double l : v->labels) {
      s.lower = seen ? std::min(s.lower, l) : l;
      s.upper = seen ? std::max(s.upper, l) : l;
      seen = true;
      distinct.insert(l);
    }
  }
  if (k > distinct.size()) {
    s.warnings.push_back("K = " + std::to_string(k) + " exceeds the " + std::to_string(distinct.size()) +
                         " distinct labels");
  }
  s.semi_bins = make_bins(semi, s.lower, s.upper, k);
  s.full_bins = make_bins(full, s.lower, s.upper, k);

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> links;
  for (const auto& m : mapping.matches) {
    if (m.mu <= 0.0) continue;
    const std::size_t si = semi.position(m.semi_row);
    const std::size_t fi = full.position(m.full_row);
    if (si == DataView::npos || fi == DataView::npos) throw ShapeError("bin_summary: mapping does not match views");
    ++links[{label_bin(semi.labels[si], s.lower, s.upper, k), label_bin(full.labels[fi], s.lower, s.upper, k)}];
    ++s.mapped;
  }
  for (const auto& [key, count] : links) s.links.push_back({key.first, key.second, count});
  return s;
}

}  // namespace civ
