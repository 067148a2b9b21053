#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "civ/dataio/views.hpp"
#include "civ/numcore/matrix.hpp"

namespace civ {

enum class Representation { embedding, raw };
enum class NoMatchRule {
  below_mean,  // no suitable positive when score_p < E[sigma] over mapped pairs
  as_written,  // no suitable positive when score_p > E[sigma] over mapped pairs
};

const char* to_string(Representation r);
Representation representation_from_string(const std::string& s);
const char* to_string(NoMatchRule r);
NoMatchRule no_match_rule_from_string(const std::string& s);

// sigma(x_s, x_f) - |label_s - label_f| / norm. A non-positive norm means every label
// gap is zero, and the label term is then 0.
double positive_score(std::span<const double> x_semi, std::span<const double> x_full, double label_semi,
                      double label_full, double norm);

// sigma(x_a, x) + |label_a - label| / norm; higher means a harder negative.
double negative_score(std::span<const double> x_anchor, std::span<const double> x, double label_anchor,
                      double label, double norm);

// max |a - b| over a in `left`, b in `right`.
double max_label_gap(std::span<const double> left, std::span<const double> right);

struct PositiveMatch {
  static constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

  std::size_t semi_row = 0;        // table row
  std::size_t full_row = none;     // table row of the positive; none when mu == 0
  std::size_t candidate_row = none;  // best-scoring full row, kept even when rejected
  double score = 0.0;
  double similarity = 0.0;
  double mu = 0.0;                 // 0.5 for a matched semi input, 0 for no match
  bool self_paired = false;        // the semi row is itself a complete record
  bool degenerate = false;         // zero representation; never matched
};

struct PositiveMapping {
  Representation representation = Representation::raw;
  NoMatchRule rule = NoMatchRule::below_mean;
  double label_norm = 0.0;
  double mean_similarity = 0.0;  // E[sigma] over mapped pairs before the no-match rule
  std::vector<PositiveMatch> matches;  // one per semi-view row, view order

  std::size_t mapped() const;
  // Match for a semi table row, or nullptr.
  const PositiveMatch* find(std::size_t semi_row) const;
};

inline constexpr double kSemiInputMu = 0.5;
inline constexpr double kFullInputMu = 1.0;

// Rows of `semi_repr` / `full_repr` align with the views' rows. Semi rows that are
// complete records map to themselves; the rest take the argmax of positive_score over
// full rows (ties to the lower table row), then the no-match rule sets mu = 0.
PositiveMapping build_positive_mapping(const DataView& semi, const DataView& full, const Matrix& semi_repr,
                                       const Matrix& full_repr, Representation representation,
                                       NoMatchRule rule = NoMatchRule::below_mean);

// Raw representation: both views on the semi view's encoded dims, centered on the
// semi view's column means so cosine compares deviations rather than raw [0,1] values.
struct RawRepresentation {
  Matrix semi;
  Matrix full;
};
RawRepresentation raw_representation(const DataView& semi, const DataView& full);

}  // namespace civ
