#include "civ/numcore/losses.hpp"

#include <algorithm>
#include <cmath>

#include "civ/error.hpp"

namespace civ {

LossResult mse_loss(const Matrix& prediction, std::span<const double> targets) {
  if (prediction.cols() != 1 || prediction.rows() != targets.size()) {
    throw ShapeError("mse_loss: prediction must be n x 1 with n targets");
  }
  LossResult out{0.0, Matrix(prediction.rows(), 1)};
  const double n = static_cast<double>(targets.size());
  if (targets.empty()) return out;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double diff = prediction(i, 0) - targets[i];
    out.value += diff * diff / n;
    out.d_prediction(i, 0) = 2.0 * diff / n;
  }
  return out;
}

LossResult cross_entropy_loss(const Matrix& logits, std::span<const double> targets) {
  if (logits.rows() != targets.size()) throw ShapeError("cross_entropy_loss: row count mismatch");
  LossResult out{0.0, Matrix(logits.rows(), logits.cols())};
  const double n = static_cast<double>(targets.size());
  if (targets.empty()) return out;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    const auto cls = static_cast<std::size_t>(targets[i]);
    if (cls >= row.size()) throw ShapeError("cross_entropy_loss: class index out of range");
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    out.value += (std::log(z) + mx - row[cls]) / n;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double p = std::exp(row[c] - mx) / z;
      out.d_prediction(i, c) = (p - (c == cls ? 1.0 : 0.0)) / n;
    }
  }
  return out;
}

}  // namespace civ
