#include "civ/baselines/auc.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "civ/error.hpp"

namespace civ {

namespace {

void check(std::span<const double> scores, std::span<const int> labels, double& pos, double& neg) {
  if (scores.size() != labels.size()) throw ShapeError("auc: scores and labels differ in length");
  pos = neg = 0.0;
  for (int l : labels) (l == 1 ? pos : neg) += 1.0;
  if (pos == 0.0 || neg == 0.0) throw ConfigError("auc needs both classes");
}

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return idx;
}

}  // namespace

double auc_rank(std::span<const double> scores, std::span<const int> labels) {
  double pos, neg;
  check(scores, labels, pos, neg);
  const auto idx = order_by_score(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (labels[idx[t]] == 1) rank_sum += avg;
    }
    i = j;
  }
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double auc_trapezoid(std::span<const double> scores, std::span<const int> labels) {
  double pos, neg;
  check(scores, labels, pos, neg);
  auto idx = order_by_score(scores);
  std::reverse(idx.begin(), idx.end());
  // Sweep the threshold from high to low; each tie group is one ROC step.
  double tp = 0.0, fp = 0.0, area = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    double dtp = 0.0, dfp = 0.0;
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1 ? dtp : dfp) += 1.0;
      ++j;
    }
    area += dfp * (2.0 * tp + dtp) / 2.0;
    tp += dtp;
    fp += dfp;
    i = j;
  }
  return area / (pos * neg);
}

}  // namespace civ
