#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "civ/dataio/views.hpp"
#include "civ/numcore/matrix.hpp"

namespace civ {

struct CirclePoint {
  std::size_t row = 0;  // stable table row
  ViewKind view = ViewKind::semi;
  double angle = 0.0;   // arccos(clamped cosine similarity to the anchor), radians
};

struct ArcSummary {
  std::size_t count = 0;
  double mean_angle = 0.0;
  double variance = 0.0;  // population variance of the angles, rad^2
  // Arc lengths on the unit circle: mean_arc = mean_scale * mean_angle,
  // variance_arc = variance_scale * variance.
  double mean_arc = 0.0;
  double variance_arc = 0.0;
};

struct CircleLayout {
  std::size_t anchor_row = 0;
  std::vector<CirclePoint> points;
  std::vector<std::string> diagnostics;  // rows excluded for a zero embedding
  std::optional<ArcSummary> subset;
};

struct ArcScales {
  double mean_scale = 1.0;
  double variance_scale = 1.0;
};

// `rows` and `views` tag each embedding row. `anchor` and `subset` index rows of
// `embeddings`. A zero anchor embedding is a DegenerateInputError.
CircleLayout circle_layout(const Matrix& embeddings, const std::vector<std::size_t>& rows,
                           const std::vector<ViewKind>& views, std::size_t anchor,
                           const std::vector<std::size_t>& subset = {}, const ArcScales& scales = {});

enum class ProjectionMethod { pca, tsne };

const char* to_string(ProjectionMethod m);
ProjectionMethod projection_method_from_string(const std::string& s);

struct Projection2D {
  ProjectionMethod method = ProjectionMethod::pca;
  Matrix coords;  // n x 2
};

struct ProjectionOptions {
  bool standardize = true;  // pca: scale columns to unit variance before projecting
  double perplexity = 30.0;
  std::size_t iterations = 500;
};

// PCA: top two principal components, each sign-fixed so its largest-magnitude loading is
// positive; missing rank yields a zero coordinate. t-SNE: exact, seeded.
Projection2D project2d(const Matrix& records, ProjectionMethod method, std::uint64_t seed,
                       const ProjectionOptions& options = {});

}  // namespace civ
