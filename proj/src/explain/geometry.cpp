#include "civ/explain/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "civ/error.hpp"
#include "civ/numcore/cosine.hpp"
#include "civ/rng.hpp"

namespace civ {

CircleLayout circle_layout(const Matrix& embeddings, const std::vector<std::size_t>& rows,
                           const std::vector<ViewKind>& views, std::size_t anchor,
                           const std::vector<std::size_t>& subset, const ArcScales& scales) {
  const std::size_t n = embeddings.rows();
  if (rows.size() != n || views.size() != n) throw ShapeError("circle_layout: row tags must match the embeddings");
  if (anchor >= n) throw NotFoundError("circle_layout: anchor index out of range");
  const auto a = embeddings.row(anchor);
  if (norm(a) == 0.0) throw DegenerateInputError("circle_layout: anchor embedding is zero");

  CircleLayout out;
  out.anchor_row = rows[anchor];
  std::vector<std::optional<double>> angle(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (norm(embeddings.row(i)) == 0.0) {
      out.diagnostics.push_back("row " + std::to_string(rows[i]) + " excluded: zero embedding");
      continue;
    }
    angle[i] = i == anchor ? 0.0 : std::acos(cosine_similarity(a, embeddings.row(i)));
    out.points.push_back({rows[i], views[i], *angle[i]});
  }

  if (!subset.empty()) {
    ArcSummary s;
    std::vector<double> vals;
    for (std::size_t i : subset) {
      if (i >= n) throw NotFoundError("circle_layout: subset index out of range");
      if (angle[i]) vals.push_back(*angle[i]);
    }
    s.count = vals.size();
    if (!vals.empty()) {
      for (double v : vals) s.mean_angle += v / static_cast<double>(vals.size());
      for (double v : vals) s.variance += (v - s.mean_angle) * (v - s.mean_angle) / static_cast<double>(vals.size());
    }
    s.mean_arc = scales.mean_scale * s.mean_angle;
    s.variance_arc = scales.variance_scale * s.variance;
    out.subset = s;
  }
  return out;
}

const char* to_string(ProjectionMethod m) { return m == ProjectionMethod::pca ? "pca" : "tsne"; }

ProjectionMethod projection_method_from_string(const std::string& s) {
  if (s == "pca") return ProjectionMethod::pca;
  if (s == "tsne") return ProjectionMethod::tsne;
  throw ConfigError("unknown projection method '" + s + "'");
}

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Mat to_eigen(const Matrix& m) {
  Mat e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  }
  return e;
}

Matrix pca(const Matrix& records, bool standardize) {
  const auto n = static_cast<Eigen::Index>(records.rows());
  Mat x = to_eigen(records);
  x.rowwise() -= x.colwise().mean();
  if (standardize) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double sd = std::sqrt(x.col(j).squaredNorm() / static_cast<double>(n));
      if (sd > 1e-12) x.col(j) /= sd;
    }
  }
  Matrix out(records.rows(), 2);
  if (x.cols() == 0) return out;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const double top = std::max(values.maxCoeff(), 0.0);
  const double tol = 1e-12 * std::max(top, 1.0);
  for (int c = 0; c < 2; ++c) {
    const Eigen::Index k = x.cols() - 1 - c;
    if (k < 0 || values(k) <= tol) continue;
    Eigen::VectorXd v = solver.eigenvectors().col(k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    const Eigen::VectorXd proj = x * v;
    for (Eigen::Index i = 0; i < n; ++i) out(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) = proj(i);
  }
  return out;
}

// Row-conditional affinities at the requested perplexity by bisection on beta.
Mat affinities(const Mat& d2, double perplexity) {
  const Eigen::Index n = d2.rows();
  Mat p = Mat::Zero(n, n);
  const double target = std::log(perplexity);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = INFINITY;
    for (int it = 0; it < 64; ++it) {
      double sum = 0.0, h = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double w = std::exp(-d2(i, j) * beta);
        p(i, j) = w;
        sum += w;
      }
      if (sum <= 0.0) {
        hi = beta;
        beta = (lo + hi) / 2.0;
        continue;
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        p(i, j) /= sum;
        h += beta * d2(i, j) * p(i, j);
      }
      h += std::log(sum);
      if (std::abs(h - target) < 1e-5) break;
      if (h > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : (lo + hi) / 2.0;
      } else {
        hi = beta;
        beta = (lo + hi) / 2.0;
      }
    }
  }
  return p;
}

Matrix tsne(const Matrix& records, std::uint64_t seed, const ProjectionOptions& opt) {
  const auto n = static_cast<Eigen::Index>(records.rows());
  const Mat x = to_eigen(records);
  Mat d2(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) d2(i, j) = (x.row(i) - x.row(j)).squaredNorm();
  }
  const double perplexity = std::min(opt.perplexity, std::max(1.0, (static_cast<double>(n) - 1.0) / 3.0));
  Mat p = affinities(d2, perplexity);
  p = (p + p.transpose()).eval() / (2.0 * static_cast<double>(n));
  p = p.cwiseMax(1e-12);

  Rng rng(seed);
  Mat y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i, 0) = 1e-4 * rng.normal();
    y(i, 1) = 1e-4 * rng.normal();
  }
  Mat velocity = Mat::Zero(n, 2);
  Mat gains = Mat::Ones(n, 2);
  constexpr std::size_t kExaggerationIters = 100;
  constexpr double kExaggeration = 12.0;
  const double learning_rate = std::max(static_cast<double>(n) / kExaggeration / 4.0, 50.0);
  for (std::size_t it = 0; it < opt.iterations; ++it) {
    const double exaggeration = it < kExaggerationIters ? kExaggeration : 1.0;
    const double momentum = it < 250 ? 0.5 : 0.8;
    Mat num(n, n);
    double z = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        num(i, j) = i == j ? 0.0 : 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
        z += num(i, j);
      }
    }
    Mat grad = Mat::Zero(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double q = std::max(num(i, j) / z, 1e-12);
        grad.row(i) += 4.0 * (exaggeration * p(i, j) - q) * num(i, j) * (y.row(i) - y.row(j));
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < 2; ++c) {
        const bool same = (grad(i, c) > 0) == (velocity(i, c) > 0);
        gains(i, c) = std::max(same ? gains(i, c) * 0.8 : gains(i, c) + 0.2, 0.01);
        velocity(i, c) = momentum * velocity(i, c) - learning_rate * gains(i, c) * grad(i, c);
      }
    }
    y += velocity;
    y.rowwise() -= y.colwise().mean();
  }
  Matrix out(records.rows(), 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(static_cast<std::size_t>(i), 0) = y(i, 0);
    out(static_cast<std::size_t>(i), 1) = y(i, 1);
  }
  return out;
}

}  // namespace

Projection2D project2d(const Matrix& records, ProjectionMethod method, std::uint64_t seed,
                       const ProjectionOptions& options) {
  if (records.rows() < 3) throw ConfigError("project2d needs at least 3 records");
  if (!records.all_finite()) throw DegenerateInputError("project2d: non-finite input");
  Projection2D out;
  out.method = method;
  out.coords = method == ProjectionMethod::pca ? pca(records, options.standardize) : tsne(records, seed, options);
  return out;
}

}  // namespace civ
