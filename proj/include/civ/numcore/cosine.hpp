#pragma once

#include <span>
#include <vector>

namespace civ {

// a.b / (|a||b|) clamped to [-1, 1]. Throws DegenerateInputError on a zero vector and
// ShapeError on a length mismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Gradient of cosine_similarity(a, b) with respect to a.
std::vector<double> cosine_similarity_grad(std::span<const double> a, std::span<const double> b);

}  // namespace civ
