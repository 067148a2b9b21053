#include "civ/numcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "civ/error.hpp"

namespace civ {

GradCheckReport finite_diff_check(const Objective& objective, std::span<const double> point,
                                  double tolerance, double step, double scale_floor) {
  const ValueAndGradient at = objective(point);
  if (at.gradient.size() != point.size()) throw ShapeError("finite_diff_check: gradient length mismatch");
  GradCheckReport report;
  std::vector<double> probe(point.begin(), point.end());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + step;
    const double up = objective(probe).value;
    probe[i] = saved - step;
    const double down = objective(probe).value;
    probe[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double analytic = at.gradient[i];
    const double scale = std::max({std::abs(analytic), std::abs(numeric), scale_floor});
    const double rel = std::abs(analytic - numeric) / scale;
    if (rel > report.max_relative_error || !std::isfinite(rel)) {
      report.max_relative_error = std::isfinite(rel) ? rel : INFINITY;
      report.worst_index = i;
    }
    ++report.checked;
  }
  report.pass = report.max_relative_error < tolerance;
  return report;
}

}  // namespace civ
