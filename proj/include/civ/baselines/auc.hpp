#pragma once

#include <span>

namespace civ {

// Area under the ROC curve for binary labels (1 = positive). Tied scores count half.
// Throws ConfigError unless both classes are present.
double auc_rank(std::span<const double> scores, std::span<const int> labels);       // Mann-Whitney U
double auc_trapezoid(std::span<const double> scores, std::span<const int> labels);  // ROC integral

}  // namespace civ
