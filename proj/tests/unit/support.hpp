#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "civ/numcore/matrix.hpp"
#include "civ/numcore/mlp.hpp"
#include "civ/rng.hpp"

namespace civtest {

inline civ::Matrix random_matrix(civ::Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                                 double hi = 1.0) {
  civ::Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

inline std::vector<double> random_vector(civ::Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Small random architecture: 1-2 hidden layers of width 2..6.
inline civ::MlpSpec random_spec(civ::Rng& rng, std::size_t input_dim) {
  civ::MlpSpec spec;
  spec.input_dim = input_dim;
  spec.hidden_dims.clear();
  const std::size_t depth = 1 + rng.below(2);
  for (std::size_t i = 0; i < depth; ++i) spec.hidden_dims.push_back(2 + rng.below(5));
  spec.embedding_dim = spec.hidden_dims.back();
  spec.activation = rng.bernoulli(0.5) ? civ::Activation::tanh : civ::Activation::relu;
  if (rng.bernoulli(0.5)) {
    spec.head = {civ::HeadKind::classification, 2 + static_cast<std::size_t>(rng.below(3))};
  }
  return spec;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double plain_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

inline std::vector<double> row_of(const civ::Matrix& m, std::size_t r) {
  auto s = m.row(r);
  return {s.begin(), s.end()};
}

}  // namespace civtest
