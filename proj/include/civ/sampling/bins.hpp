#pragma once

#include <string>
#include <vector>

#include "civ/dataio/views.hpp"
#include "civ/sampling/positive.hpp"

namespace civ {

struct LabelBin {
  std::size_t count = 0;
  double lower = 0.0;  // bin edges
  double upper = 0.0;
  double min_label = 0.0;  // observed range; 0 when the bin is empty
  double max_label = 0.0;
  std::vector<double> feature_means;  // per encoded dim of the view
};

struct BinLink {
  std::size_t semi_bin = 0;
  std::size_t full_bin = 0;
  std::size_t count = 0;
};

// Equal-width label bins over the joint label range of both views, with one link per
// nonempty (semi bin, full bin) pair of matched positives.
struct BinSummary {
  std::size_t k = 0;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<LabelBin> semi_bins;
  std::vector<LabelBin> full_bins;
  std::vector<BinLink> links;
  std::size_t mapped = 0;
  std::vector<std::string> warnings;
};

std::size_t label_bin(double label, double lower, double upper, std::size_t k);

BinSummary bin_summary(const PositiveMapping& mapping, const DataView& semi, const DataView& full, std::size_t k);

}  // namespace civ
