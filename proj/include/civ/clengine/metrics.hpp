#pragma once

#include <optional>
#include <vector>

#include "civ/clengine/model_pair.hpp"
#include "civ/numcore/matrix.hpp"

namespace civ {

struct ScoreStats {
  std::optional<double> mean_pos;
  std::optional<double> mean_neg;
  std::optional<double> var_neg;  // population variance
};

// mean_pos: mean of sigma(queries[i], positives[i]) over aligned rows.
// mean_neg / var_neg: over every (query, negative) pair. Zero rows are skipped.
// Absent statistics stay empty rather than 0.
ScoreStats score_stats(const Matrix& queries, const Matrix& positives, const Matrix& negatives);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double task_loss = 0.0;
  double contrastive_loss = 0.0;
  std::optional<double> validation_metric;       // semi model; scaled MSE or error rate
  std::optional<double> full_validation_metric;  // full model, same metric
  std::optional<double> mean_pos;
  std::optional<double> mean_neg;
  std::optional<double> var_neg;
  bool collapse_flag = false;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct CollapseRule {
  std::size_t window = 5;
  double mean_threshold = 0.995;
  double variance_threshold = 1e-4;

  bool offending(const EpochMetrics& m) const;
};

struct CollapseReport {
  bool collapsed = false;
  std::size_t first_offending_epoch = 0;  // epoch at which the window first completes
};

CollapseReport detect_collapse(const std::vector<EpochMetrics>& stream, const CollapseRule& rule = {});

struct TrainRecorder {
  std::vector<EpochMetrics> epochs;
  CollapseReport collapse;
  bool stopped = false;
};

}  // namespace civ
