#include "civ/sampling/positive.hpp"

#include <algorithm>
#include <cmath>

#include "civ/error.hpp"
#include "civ/numcore/cosine.hpp"

namespace civ {

const char* to_string(Representation r) { return r == Representation::raw ? "raw" : "embedding"; }

Representation representation_from_string(const std::string& s) {
  if (s == "raw") return Representation::raw;
  if (s == "embedding") return Representation::embedding;
  throw ConfigError("unknown representation '" + s + "'");
}

const char* to_string(NoMatchRule r) { return r == NoMatchRule::below_mean ? "below-mean" : "as-written"; }

NoMatchRule no_match_rule_from_string(const std::string& s) {
  if (s == "below-mean" || s == "below_mean") return NoMatchRule::below_mean;
  if (s == "as-written" || s == "as_written") return NoMatchRule::as_written;
  throw ConfigError("unknown no-match rule '" + s + "'");
}

double positive_score(std::span<const double> x_semi, std::span<const double> x_full, double label_semi,
                      double label_full, double norm) {
  const double gap = norm > 0.0 ? std::abs(label_semi - label_full) / norm : 0.0;
  return cosine_similarity(x_semi, x_full) - gap;
}

double negative_score(std::span<const double> x_anchor, std::span<const double> x, double label_anchor,
                      double label, double norm) {
  const double gap = norm > 0.0 ? std::abs(label_anchor - label) / norm : 0.0;
  return cosine_similarity(x_anchor, x) + gap;
}

double max_label_gap(std::span<const double> left, std::span<const double> right) {
  if (left.empty() || right.empty()) return 0.0;
  const auto [lmin, lmax] = std::minmax_element(left.begin(), left.end());
  const auto [rmin, rmax] = std::minmax_element(right.begin(), right.end());
  return std::max(std::abs(*lmax - *rmin), std::abs(*rmax - *lmin));
}

std::size_t PositiveMapping::mapped() const {
  return static_cast<std::size_t>(
      std::count_if(matches.begin(), matches.end(), [](const PositiveMatch& m) { return m.mu > 0.0; }));
}

const PositiveMatch* PositiveMapping::find(std::size_t semi_row) const {
  const auto it = std::lower_bound(matches.begin(), matches.end(), semi_row,
                                   [](const PositiveMatch& m, std::size_t r) { return m.semi_row < r; });
  return it != matches.end() && it->semi_row == semi_row ? &*it : nullptr;
}

namespace {

bool is_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace

PositiveMapping build_positive_mapping(const DataView& semi, const DataView& full, const Matrix& semi_repr,
                                       const Matrix& full_repr, Representation representation, NoMatchRule rule) {
  if (semi.empty() || full.empty()) throw WorkflowError("positive mapping needs nonempty semi and full views");
  if (semi_repr.rows() != semi.size() || full_repr.rows() != full.size() || semi_repr.cols() != full_repr.cols()) {
    throw ShapeError("positive mapping: representation shapes do not match the views");
  }
  PositiveMapping mapping;
  mapping.representation = representation;
  mapping.rule = rule;
  mapping.label_norm = max_label_gap(semi.labels, full.labels);

  std::vector<bool> full_zero(full.size());
  for (std::size_t j = 0; j < full.size(); ++j) full_zero[j] = is_zero(full_repr.row(j));

  double sim_sum = 0.0;
  std::size_t sim_count = 0;
  mapping.matches.reserve(semi.size());
  for (std::size_t i = 0; i < semi.size(); ++i) {
    PositiveMatch m;
    m.semi_row = semi.rows[i];
    const auto xs = semi_repr.row(i);
    if (is_zero(xs)) {
      m.degenerate = true;
      mapping.matches.push_back(m);
      continue;
    }
    const std::size_t self = full.position(m.semi_row);
    if (self != DataView::npos && !full_zero[self]) {
      m.self_paired = true;
      m.candidate_row = m.semi_row;
      m.similarity = cosine_similarity(xs, full_repr.row(self));
      m.score = m.similarity;
    } else {
      double best = -INFINITY;
      for (std::size_t j = 0; j < full.size(); ++j) {
        if (full_zero[j]) continue;
        const double s = positive_score(xs, full_repr.row(j), semi.labels[i], full.labels[j], mapping.label_norm);
        if (s > best) {
          best = s;
          m.candidate_row = full.rows[j];
        }
      }
      if (m.candidate_row == PositiveMatch::none) {
        m.degenerate = true;
        mapping.matches.push_back(m);
        continue;
      }
      m.score = best;
      m.similarity = cosine_similarity(xs, full_repr.row(full.position(m.candidate_row)));
    }
    m.full_row = m.candidate_row;
    m.mu = kSemiInputMu;
    sim_sum += m.similarity;
    ++sim_count;
    mapping.matches.push_back(m);
  }

  mapping.mean_similarity = sim_count ? sim_sum / static_cast<double>(sim_count) : 0.0;
  for (auto& m : mapping.matches) {
    if (m.mu == 0.0 || m.self_paired) continue;
    const bool reject =
        rule == NoMatchRule::below_mean ? m.score < mapping.mean_similarity : m.score > mapping.mean_similarity;
    if (reject) {
      m.mu = 0.0;
      m.full_row = PositiveMatch::none;
    }
  }
  return mapping;
}

RawRepresentation raw_representation(const DataView& semi, const DataView& full) {
  std::vector<double> mean(semi.width(), 0.0);
  for (std::size_t i = 0; i < semi.size(); ++i) {
    for (std::size_t d = 0; d < semi.width(); ++d) mean[d] += semi.x(i, d) / static_cast<double>(semi.size());
  }
  // Full view dims are every encoded dim in order, so semi dims index it directly.
  RawRepresentation out{semi.x, full.x.gather_cols(semi.dims)};
  for (Matrix* m : {&out.semi, &out.full}) {
    for (std::size_t i = 0; i < m->rows(); ++i) {
      for (std::size_t d = 0; d < m->cols(); ++d) (*m)(i, d) -= mean[d];
    }
  }
  return out;
}

}  // namespace civ
