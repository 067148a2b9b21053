#pragma once

#include <span>
#include <string>
#include <vector>

#include "civ/dataio/encode.hpp"
#include "civ/numcore/mlp.hpp"

namespace civ {

struct FeatureAttribution {
  std::vector<std::string> features;  // original columns, model input order
  std::vector<double> importance;     // max-normalized, in [0, 1]
  bool zero_gradient = false;         // every importance is 0
};

// importance_j = sum over the encoded dims of column j of |d y / d x_d * x_d|, then divided
// by the largest entry. y is the regression output or the logit of the predicted class.
// `columns` are positions in encoding.columns whose dims make up the model input.
FeatureAttribution attribute(const MlpParams& model, std::span<const double> record, const Encoding& encoding,
                             const std::vector<std::size_t>& columns);

// One attribution per row of `records`.
std::vector<FeatureAttribution> attribute_rows(const MlpParams& model, const Matrix& records, const Encoding& encoding,
                                               const std::vector<std::size_t>& columns);

// Mean of per-row unnormalized importances, then max-normalized.
FeatureAttribution attribute_mean(const MlpParams& model, const Matrix& records, const Encoding& encoding,
                                  const std::vector<std::size_t>& columns);

}  // namespace civ
