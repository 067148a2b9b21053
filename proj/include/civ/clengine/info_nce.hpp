#pragma once

#include <span>
#include <vector>

#include "civ/numcore/matrix.hpp"

namespace civ {

struct InfoNceResult {
  double loss = 0.0;
  std::vector<double> grad_q;  // d loss / d q; keys are treated as constants
};

// Negative keys normalized once so a batch of queries can share them.
class NegativeBank {
 public:
  NegativeBank() = default;
  explicit NegativeBank(const Matrix& negatives);  // throws DegenerateInputError on a zero row

  std::size_t size() const { return unit_.rows(); }
  std::size_t dim() const { return unit_.cols(); }
  const Matrix& unit() const { return unit_; }

 private:
  Matrix unit_;
};

// -log( exp(s+/T) / (exp(s+/T) + sum_i exp(s_i/T)) ) with s = cosine similarity to q,
// evaluated with the max logit subtracted.
InfoNceResult info_nce(std::span<const double> q, std::span<const double> k_plus, const NegativeBank& negatives,
                       double temperature);
InfoNceResult info_nce(std::span<const double> q, std::span<const double> k_plus, const Matrix& negatives,
                       double temperature);

}  // namespace civ
