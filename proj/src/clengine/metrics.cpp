#include "civ/clengine/metrics.hpp"

#include "civ/error.hpp"
#include "civ/numcore/cosine.hpp"

namespace civ {

ScoreStats score_stats(const Matrix& queries, const Matrix& positives, const Matrix& negatives) {
  if (positives.rows() != 0 && positives.rows() != queries.rows()) {
    throw ShapeError("score_stats: positives must align with queries");
  }
  ScoreStats out;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < positives.rows(); ++i) {
    if (norm(queries.row(i)) == 0.0 || norm(positives.row(i)) == 0.0) continue;
    sum += cosine_similarity(queries.row(i), positives.row(i));
    ++n;
  }
  if (n > 0) out.mean_pos = sum / static_cast<double>(n);

  std::vector<double> sims;
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    if (norm(queries.row(i)) == 0.0) continue;
    for (std::size_t j = 0; j < negatives.rows(); ++j) {
      if (norm(negatives.row(j)) == 0.0) continue;
      sims.push_back(cosine_similarity(queries.row(i), negatives.row(j)));
    }
  }
  if (!sims.empty()) {
    double mean = 0.0;
    for (double s : sims) mean += s;
    mean /= static_cast<double>(sims.size());
    double var = 0.0;
    for (double s : sims) var += (s - mean) * (s - mean);
    out.mean_neg = mean;
    out.var_neg = var / static_cast<double>(sims.size());
  }
  return out;
}

bool CollapseRule::offending(const EpochMetrics& m) const {
  return m.mean_pos && m.mean_neg && m.var_neg && *m.mean_pos >= mean_threshold && *m.mean_neg >= mean_threshold &&
         *m.var_neg <= variance_threshold;
}

CollapseReport detect_collapse(const std::vector<EpochMetrics>& stream, const CollapseRule& rule) {
  if (rule.window == 0) throw ConfigError("collapse window must be >= 1");
  CollapseReport out;
  std::size_t run = 0;
  for (const EpochMetrics& m : stream) {
    run = rule.offending(m) ? run + 1 : 0;
    if (run == rule.window) {
      out.collapsed = true;
      out.first_offending_epoch = m.epoch;
      break;
    }
  }
  return out;
}

}  // namespace civ
