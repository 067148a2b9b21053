#pragma once

#include <span>

#include "civ/numcore/matrix.hpp"

namespace civ {

struct LossResult {
  double value = 0.0;
  Matrix d_prediction;  // d value / d prediction
};

// Mean squared error over a single-output prediction column.
LossResult mse_loss(const Matrix& prediction, std::span<const double> targets);

// Mean softmax cross-entropy; targets hold class indices.
LossResult cross_entropy_loss(const Matrix& logits, std::span<const double> targets);

}  // namespace civ
