#include "civ/clengine/objective.hpp"

#include "civ/error.hpp"

namespace civ {

LossResult task_loss(const MlpParams& model, const Matrix& prediction, std::span<const double> labels) {
  return model.spec.head.kind == HeadKind::regression ? mse_loss(prediction, labels)
                                                      : cross_entropy_loss(prediction, labels);
}

namespace {

std::vector<double> gather(std::span<const double> values, std::span<const std::size_t> positions) {
  std::vector<double> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back(values[p]);
  return out;
}

}  // namespace

TaskStep task_step(const MlpParams& model, const DataView& view, std::span<const std::size_t> positions) {
  const Matrix x = view.x.gather_rows(positions);
  const ForwardResult fwd = forward(model, x);
  const LossResult loss = task_loss(model, fwd.prediction, gather(view.labels, positions));
  return {loss.value, backward(model, fwd.cache, {Matrix{}, loss.d_prediction})};
}

ObjectiveResult combined_loss(const Batch& batch, const ObjectiveInputs& in) {
  const DataView& full = in.views.full;
  const DataView& semi = in.views.semi;
  if (in.mapping.matches.size() != semi.size()) {
    throw WorkflowError("combined_loss: positive mapping is not set for the current semi view");
  }
  if (batch.positions.empty()) throw ContractError("combined_loss: empty batch");
  const double weight = in.contrastive_weight;
  const double n = static_cast<double>(batch.positions.size());

  ObjectiveResult out;
  out.grad_full = Gradients::zeros_like(in.pair.full);
  out.grad_semi = Gradients::zeros_like(in.pair.semi);

  if (batch.kind == BatchKind::full) {
    const Matrix xf = full.x.gather_rows(batch.positions);
    const ForwardResult ff = forward(in.pair.full, xf);
    const LossResult task = task_loss(in.pair.full, ff.prediction, gather(full.labels, batch.positions));
    out.task = task.value;
    out.grad_full = backward(in.pair.full, ff.cache, {Matrix{}, task.d_prediction});
    out.total = out.task;
    if (weight == 0.0) return out;

    const ForwardResult fs = forward(in.pair.semi, xf.gather_cols(semi.dims));
    Matrix d_emb(fs.embedding.rows(), fs.embedding.cols());
    double con = 0.0;
    for (std::size_t i = 0; i < batch.positions.size(); ++i) {
      const InfoNceResult r = info_nce(fs.embedding.row(i), ff.embedding.row(i), in.negatives, in.temperature);
      con += kFullInputMu * r.loss / n;
      for (std::size_t t = 0; t < r.grad_q.size(); ++t) d_emb(i, t) = weight * kFullInputMu * r.grad_q[t] / n;
      ++out.contrastive_terms;
    }
    out.contrastive = con;
    out.total += weight * con;
    out.grad_semi = backward(in.pair.semi, fs.cache, {std::move(d_emb), Matrix{}});
    return out;
  }

  const Matrix xs = semi.x.gather_rows(batch.positions);
  const ForwardResult fs = forward(in.pair.semi, xs);
  const LossResult task = task_loss(in.pair.semi, fs.prediction, gather(semi.labels, batch.positions));
  out.task = task.value;
  out.total = out.task;
  if (weight == 0.0) {
    out.grad_semi = backward(in.pair.semi, fs.cache, {Matrix{}, task.d_prediction});
    return out;
  }

  // Embed every mapped positive with the full model in one pass.
  std::vector<std::size_t> with_positive;
  std::vector<std::size_t> positive_positions;
  for (std::size_t i = 0; i < batch.positions.size(); ++i) {
    const PositiveMatch& m = in.mapping.matches[batch.positions[i]];
    if (m.semi_row != semi.rows[batch.positions[i]]) throw ContractError("combined_loss: mapping out of view order");
    if (m.mu <= 0.0) continue;
    with_positive.push_back(i);
    positive_positions.push_back(full.position(m.full_row));
  }
  Matrix d_emb(fs.embedding.rows(), fs.embedding.cols());
  if (!with_positive.empty()) {
    const Matrix keys = forward(in.pair.full, full.x.gather_rows(positive_positions)).embedding;
    double con = 0.0;
    for (std::size_t j = 0; j < with_positive.size(); ++j) {
      const std::size_t i = with_positive[j];
      const double mu = in.mapping.matches[batch.positions[i]].mu;
      const InfoNceResult r = info_nce(fs.embedding.row(i), keys.row(j), in.negatives, in.temperature);
      con += mu * r.loss / n;
      for (std::size_t t = 0; t < r.grad_q.size(); ++t) d_emb(i, t) = weight * mu * r.grad_q[t] / n;
      ++out.contrastive_terms;
    }
    out.contrastive = con;
    out.total += weight * con;
  }
  out.grad_semi = backward(in.pair.semi, fs.cache, {std::move(d_emb), task.d_prediction});
  return out;
}

}  // namespace civ
