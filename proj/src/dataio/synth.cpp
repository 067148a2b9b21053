#include "civ/dataio/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "civ/error.hpp"
#include "civ/rng.hpp"

namespace civ {

namespace {

constexpr std::size_t kLatent = 3;
constexpr double kFeatureNoise = 0.3;
constexpr double kLabelNoise = 0.1;
const std::array<const char*, 4> kLevels{"A", "B", "C", "D"};

}  // namespace

void SynthSpec::validate() const {
  if (rows < 50) throw ConfigError("synthetic: rows must be >= 50");
  if (numeric_dims + categorical_dims == 0) throw ConfigError("synthetic: need at least one feature");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw ConfigError("synthetic: missing_rate must lie in [0, 1)");
}

std::vector<std::string> synth_missing_columns(const SynthSpec& spec) {
  std::vector<std::string> out;
  const std::size_t k = std::min<std::size_t>(3, spec.numeric_dims);
  for (std::size_t i = spec.numeric_dims - k; i < spec.numeric_dims; ++i) out.push_back("num_" + std::to_string(i));
  return out;
}

RawTable synth_generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t nd = spec.numeric_dims;
  const std::size_t nc = spec.categorical_dims;

  // Loadings of each feature on the latent factors, unit norm.
  auto loading = [&rng]() {
    std::array<double, kLatent> a{};
    double s = 0.0;
    for (double& v : a) {
      v = rng.normal();
      s += v * v;
    }
    for (double& v : a) v /= std::sqrt(s);
    return a;
  };
  std::vector<std::array<double, kLatent>> num_load(nd), cat_load(nc);
  for (auto& a : num_load) a = loading();
  for (auto& a : cat_load) a = loading();
  std::vector<double> num_weight(nd), cat_effect(nc * kLevels.size());
  for (double& w : num_weight) w = rng.uniform(-1.0, 1.0);
  for (double& w : cat_effect) w = rng.uniform(-0.5, 0.5);

  RawTable t;
  t.task = spec.task;
  t.label = "target";
  for (std::size_t i = 0; i < nd; ++i) {
    t.columns.push_back("num_" + std::to_string(i));
    t.kinds.push_back(ColumnKind::numeric);
  }
  for (std::size_t i = 0; i < nc; ++i) {
    t.columns.push_back("cat_" + std::to_string(i));
    t.kinds.push_back(ColumnKind::categorical);
  }
  t.columns.push_back(t.label);
  t.kinds.push_back(spec.task == Task::regression ? ColumnKind::numeric : ColumnKind::categorical);

  std::vector<double> scores(spec.rows);
  std::vector<double> x(nd);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    std::array<double, kLatent> z{};
    for (double& v : z) v = rng.normal();
    std::vector<Cell> row;
    double score = 0.0;
    for (std::size_t i = 0; i < nd; ++i) {
      double v = kFeatureNoise * rng.normal();
      for (std::size_t k = 0; k < kLatent; ++k) v += num_load[i][k] * z[k];
      x[i] = v;
      score += num_weight[i] * v;
      row.emplace_back(v);
    }
    for (std::size_t i = 0; i < nc; ++i) {
      double v = 0.5 * rng.normal();
      for (std::size_t k = 0; k < kLatent; ++k) v += cat_load[i][k] * z[k];
      // Thresholds at the quartiles of N(0, 1.25).
      const std::size_t level = v < -0.754 ? 0 : v < 0.0 ? 1 : v < 0.754 ? 2 : 3;
      score += cat_effect[i * kLevels.size() + level];
      row.emplace_back(std::string(kLevels[level]));
    }
    if (spec.task == Task::regression) {
      // Mild nonlinearity on the first two numeric columns.
      if (nd >= 2) score += 0.5 * std::tanh(x[0] * x[1]);
      score += kLabelNoise * rng.normal();
    }
    scores[r] = score;
    row.emplace_back(std::monostate{});
    t.rows.push_back(std::move(row));
  }

  const std::size_t li = t.columns.size() - 1;
  if (spec.task == Task::regression) {
    for (std::size_t r = 0; r < spec.rows; ++r) t.rows[r][li] = scores[r];
  } else {
    // Noise-free threshold at the median: linearly separable in the features.
    std::vector<double> sorted = scores;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (std::size_t r = 0; r < spec.rows; ++r) t.rows[r][li] = std::string(scores[r] >= median ? "1" : "0");
  }

  if (spec.missing_rate > 0.0) {
    for (const auto& name : synth_missing_columns(spec)) {
      const std::size_t c = t.column_index(name);
      for (auto& row : t.rows) {
        if (rng.bernoulli(spec.missing_rate)) row[c] = std::monostate{};
      }
    }
  }
  t.validate();
  return t;
}

}  // namespace civ
