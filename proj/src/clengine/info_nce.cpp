#include "civ/clengine/info_nce.hpp"

#include <algorithm>
#include <cmath>

#include "civ/error.hpp"

namespace civ {

NegativeBank::NegativeBank(const Matrix& negatives) : unit_(negatives) {
  for (std::size_t r = 0; r < unit_.rows(); ++r) {
    auto row = unit_.row(r);
    const double n = norm(row);
    if (n == 0.0) throw DegenerateInputError("info_nce: zero negative embedding");
    for (double& v : row) v /= n;
  }
}

InfoNceResult info_nce(std::span<const double> q, std::span<const double> k_plus, const NegativeBank& negatives,
                       double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("info_nce: temperature must be positive");
  if (q.size() != k_plus.size() || (negatives.size() > 0 && negatives.dim() != q.size())) {
    throw ShapeError("info_nce: embedding width mismatch");
  }
  const double qn = norm(q);
  const double kn = norm(k_plus);
  if (qn == 0.0 || kn == 0.0) throw DegenerateInputError("info_nce: zero query or positive embedding");

  const std::size_t d = q.size();
  const std::size_t k = negatives.size();
  // sims[0] is the positive pair.
  std::vector<double> sims(k + 1);
  sims[0] = dot(q, k_plus) / (qn * kn);
  for (std::size_t i = 0; i < k; ++i) sims[i + 1] = dot(q, negatives.unit().row(i)) / qn;

  std::vector<double> logits(k + 1);
  for (std::size_t j = 0; j <= k; ++j) logits[j] = sims[j] / temperature;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);

  InfoNceResult out;
  out.loss = std::log(z) + mx - logits[0];
  out.grad_q.assign(d, 0.0);
  // d s_j / d q = u_j / |q| - s_j q / |q|^2 with u_j the unit key.
  for (std::size_t j = 0; j <= k; ++j) {
    const double p = std::exp(logits[j] - mx) / z;
    const double coeff = (p - (j == 0 ? 1.0 : 0.0)) / temperature;
    if (coeff == 0.0) continue;
    for (std::size_t t = 0; t < d; ++t) {
      const double u = j == 0 ? k_plus[t] / kn : negatives.unit()(j - 1, t);
      out.grad_q[t] += coeff * (u / qn - sims[j] * q[t] / (qn * qn));
    }
  }
  return out;
}

InfoNceResult info_nce(std::span<const double> q, std::span<const double> k_plus, const Matrix& negatives,
                       double temperature) {
  return info_nce(q, k_plus, negatives.rows() == 0 ? NegativeBank{} : NegativeBank(negatives), temperature);
}

}  // namespace civ
