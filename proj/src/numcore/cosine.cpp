#include "civ/numcore/cosine.hpp"

#include <algorithm>
#include <cmath>

#include "civ/error.hpp"
#include "civ/numcore/matrix.hpp"

namespace civ {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine_similarity: length mismatch");
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw DegenerateInputError("cosine_similarity: zero vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

std::vector<double> cosine_similarity_grad(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine_similarity_grad: length mismatch");
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw DegenerateInputError("cosine_similarity_grad: zero vector");
  // Unclamped value: the gradient is of the smooth function, not its clamp.
  const double cos = dot(a, b) / (na * nb);
  std::vector<double> g(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    g[i] = b[i] / (na * nb) - cos * a[i] / (na * na);
  }
  return g;
}

}  // namespace civ
