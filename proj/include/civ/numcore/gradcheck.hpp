#pragma once

#include <functional>
#include <span>
#include <vector>

namespace civ {

struct ValueAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

using Objective = std::function<ValueAndGradient(std::span<const double>)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  bool pass = true;
};

// Compares the analytic gradient at `point` with central differences. The relative
// error of one coordinate is |a - n| / max(|a|, |n|, scale_floor); the floor keeps
// coordinates whose true gradient is ~0 from being judged on rounding noise alone.
GradCheckReport finite_diff_check(const Objective& objective, std::span<const double> point,
                                  double tolerance, double step = 1e-5, double scale_floor = 1e-3);

}  // namespace civ
