#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <vector>

#include "civ/clengine/config.hpp"
#include "civ/clengine/metrics.hpp"
#include "civ/clengine/model_pair.hpp"
#include "civ/clengine/objective.hpp"
#include "civ/dataio/views.hpp"
#include "civ/rng.hpp"
#include "civ/sampling/negative.hpp"
#include "civ/sampling/positive.hpp"

namespace civ {

// Train and validation projections of one encoded dataset.
struct TrainingData {
  const EncodedDataset* dataset = nullptr;
  ViewPair train;
  ViewPair validation;
};

TrainingData make_training_data(const EncodedDataset& ds, const std::vector<std::string>& selected,
                                const std::vector<std::size_t>& train_rows,
                                const std::vector<std::size_t>& validation_rows);

struct SamplingState {
  PositiveMapping mapping;  // over data.train
  NegativeCollection negatives;
};

// Scaled MSE for regression, error rate for classification; empty for an empty view.
std::optional<double> evaluate(const MlpParams& model, const DataView& view);
std::optional<double> evaluate_predictions(const MlpParams& model, const Matrix& prediction,
                                           std::span<const double> labels);

struct PretrainEpoch {
  std::size_t epoch = 0;
  double full_loss = 0.0;
  double semi_loss = 0.0;
};

struct PretrainReport {
  std::vector<PretrainEpoch> epochs;
  std::optional<double> full_validation;
  std::optional<double> semi_validation;
};

struct PretrainResult {
  ModelPair pair;
  PretrainReport report;
};

// Full model on the full view, semi model on the semi view, task loss only. Momentum
// encoders are synced to their sources at the end.
PretrainResult pretrain(const TrainingData& data, const MlpSpec& encoder, const PretrainConfig& config);

// Continues pretraining an existing pair (pure task loss).
PretrainReport pretrain_in_place(ModelPair& pair, const TrainingData& data, const PretrainConfig& config);

inline constexpr double kRawRepresentationThreshold = 0.25;

// Raw when the pretrained semi model validates worse than `threshold`.
Representation default_representation(std::optional<double> semi_validation,
                                      double threshold = kRawRepresentationThreshold);

// Embedding representation requires a pretrained pair (StateError otherwise).
PositiveMapping build_positive_mapping(const ViewPair& views, const ModelPair& pair, Representation representation,
                                       NoMatchRule rule = NoMatchRule::below_mean);

// Encoded feature row of a negative reference on its view's dims.
std::vector<double> negative_row(const EncodedDataset& ds, const ViewPair& views, const NegativeRef& ref);

// Momentum-encoder embeddings of every collection entry, in collection order.
Matrix negative_embeddings(const EncodedDataset& ds, const ViewPair& views, const ModelPair& pair,
                           const NegativeCollection& negatives);

// Hard-sampling candidates for the given table rows. With the embedding representation
// x is the model embedding of each row, otherwise the row's encoded semi dims.
struct CandidateSet {
  Matrix x;
  std::vector<NegativeCandidate> candidates;  // spans point into x
  std::vector<NegativeRef> skipped;           // zero representation
};
CandidateSet negative_candidates(const EncodedDataset& ds, const ViewPair& views, const ModelPair& pair,
                                 const std::vector<NegativeRef>& refs, Representation representation);

// mean_pos over the probe, mean_neg / var_neg against the negative collection.
// The probe is at most `probe_limit` evenly spaced train semi rows.
ScoreStats metrics_snapshot(const TrainingData& data, const ModelPair& pair, const PositiveMapping& mapping,
                            const NegativeCollection& negatives, std::size_t probe_limit = 512);

// Default sampling used by the scripted drivers: positive mapping in the chosen (or
// default) representation, then one strategy run over every train semi row.
struct SamplingPlan {
  std::optional<Representation> representation;
  NoMatchRule rule = NoMatchRule::below_mean;
  SamplingStrategy negatives{NegativeStrategy::hard, 0.6};
  std::uint64_t seed = 0;
};
SamplingState plan_sampling(const TrainingData& data, const ModelPair& pair, std::optional<double> semi_validation,
                            const SamplingPlan& plan);

struct TrainHooks {
  std::function<void(const EpochMetrics&)> on_epoch;
  const std::atomic<bool>* stop = nullptr;  // checked between batches
  CollapseRule collapse;
};

// Contrastive training. Epochs are numbered from 1; epochs = 0 records a single entry
// with index 0 and leaves the pair untouched. A non-finite loss restores the pair as
// it was at the start of the failing epoch and throws TrainingError.
TrainRecorder train(ModelPair& pair, const TrainingData& data, const SamplingState& sampling,
                    const TrainConfig& config, const TrainHooks& hooks = {});

// Full-then-semi alternation of seeded minibatches for one epoch.
std::vector<Batch> epoch_batches(std::size_t full_rows, std::size_t semi_rows, std::size_t batch_size, Rng& rng);

}  // namespace civ
