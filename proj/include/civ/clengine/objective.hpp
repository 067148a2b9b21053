#pragma once

#include <span>
#include <vector>

#include "civ/clengine/config.hpp"
#include "civ/clengine/info_nce.hpp"
#include "civ/clengine/model_pair.hpp"
#include "civ/dataio/views.hpp"
#include "civ/numcore/losses.hpp"
#include "civ/sampling/positive.hpp"

namespace civ {

enum class BatchKind { full, semi };

// A minibatch of positions into the training full or semi view.
struct Batch {
  BatchKind kind = BatchKind::semi;
  std::vector<std::size_t> positions;
};

// Task loss of one model on rows of its own view: MSE for a regression head,
// cross-entropy for a classification head.
LossResult task_loss(const MlpParams& model, const Matrix& prediction, std::span<const double> labels);

struct TaskStep {
  double loss = 0.0;
  Gradients grads;
};
TaskStep task_step(const MlpParams& model, const DataView& view, std::span<const std::size_t> positions);

struct ObjectiveInputs {
  const ViewPair& views;
  const PositiveMapping& mapping;
  const NegativeBank& negatives;  // momentum-encoder embeddings of the queue contents
  const ModelPair& pair;
  double temperature = 1.0;
  double contrastive_weight = 0.0;
};

struct ObjectiveResult {
  double total = 0.0;
  double task = 0.0;
  double contrastive = 0.0;  // mean over the batch of mu * L_con, before the weight M
  std::size_t contrastive_terms = 0;
  Gradients grad_full;
  Gradients grad_semi;
};

// L = L_task + M * mu * L_con averaged over the batch.
//  - full batch: the full model takes the task loss on its rows; the semi model sees
//    the same rows through the selected columns with mu = 1 and k+ from the full model.
//  - semi batch: the semi model takes the task loss plus the contrastive term with the
//    mapped mu and k+ = full-model embedding of the mapped positive; full grads are 0.
// Keys (k+ and negatives) carry no gradient. With M = 0 the contrastive path is skipped
// and the result equals task_step() exactly.
ObjectiveResult combined_loss(const Batch& batch, const ObjectiveInputs& in);

}  // namespace civ
