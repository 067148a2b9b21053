#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "civ/clengine/config.hpp"
#include "civ/clengine/serialize.hpp"
#include "civ/clengine/trainer.hpp"
#include "civ/dataio/split.hpp"
#include "civ/dataio/synth.hpp"
#include "civ/dataio/table.hpp"

namespace civ {

struct BenchConfig {
  // Either a synthetic spec (regenerated per seed) or a fixed table.
  std::optional<SynthSpec> synthetic;
  std::optional<RawTable> table;
  // Empty: every feature without missing values.
  std::vector<std::string> selected;
  MlpSpec encoder;
  PretrainConfig pretrain;
  TrainConfig train;
  SamplingPlan sampling;
  std::size_t knn_k = 5;
  SplitSpec split{0.10, 0.10, SplitPolicy::seeded_shuffle, 0};
  std::vector<std::uint64_t> seeds{0, 1, 2};
};

inline const std::vector<std::string> kBenchMethods{"knn", "most_frequent", "cl_semi", "pure_semi"};

struct MethodResult {
  std::string method;
  std::optional<double> mse;  // regression, scaled labels
  std::optional<double> acc;  // classification
  std::optional<double> auc;  // binary classification
  double runtime_seconds = 0.0;
  std::string failure;  // empty on success
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<std::size_t> test_rows;
  std::vector<MethodResult> methods;  // kBenchMethods order
};

struct MethodSummary {
  std::string method;
  std::optional<double> mean;  // of the primary metric (mse or acc)
  std::optional<double> stdev;
  std::optional<double> auc_mean;
  std::size_t runs = 0;
};

struct BenchReport {
  Task task = Task::regression;
  std::string metric;  // "mse" or "acc"
  std::vector<std::string> selected;
  std::vector<SeedResult> seeds;
  std::vector<MethodSummary> summary;
};

// Imputation baselines are scored through the trained full model on imputed test rows;
// cl_semi and pure_semi through their semi models. pure_semi repeats the training schedule
// with contrastive weight 0. Every method sees the same test rows.
BenchReport run_bench(const BenchConfig& config);

Json to_json(const BenchReport& report);
std::string bench_text(const BenchReport& report);

}  // namespace civ
