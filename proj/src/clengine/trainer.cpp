#include "civ/clengine/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "civ/error.hpp"
#include "civ/sampling/queue.hpp"

namespace civ {

namespace {

Matrix embed(const MlpParams& model, const Matrix& x) {
  if (x.rows() == 0) return Matrix(0, model.spec.embedding_dim);
  return forward(model, x).embedding;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

std::vector<std::vector<std::size_t>> chunks(const std::vector<std::size_t>& order, std::size_t size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += size) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + size)));
  }
  return out;
}

}  // namespace

TrainingData make_training_data(const EncodedDataset& ds, const std::vector<std::string>& selected,
                                const std::vector<std::size_t>& train_rows,
                                const std::vector<std::size_t>& validation_rows) {
  TrainingData data;
  data.dataset = &ds;
  data.train = derive_views(ds, selected, train_rows);
  const std::vector<std::size_t> columns = column_positions(ds.encoding, selected);
  std::vector<std::size_t> all(ds.encoding.columns.size());
  for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
  data.validation.full = make_view(ds, ViewKind::full, all, validation_rows);
  data.validation.semi = make_view(ds, ViewKind::semi, columns, validation_rows);
  return data;
}

std::optional<double> evaluate_predictions(const MlpParams& model, const Matrix& prediction,
                                           std::span<const double> labels) {
  if (prediction.rows() == 0) return std::nullopt;
  if (labels.size() != prediction.rows()) throw ShapeError("evaluate: label count mismatch");
  double sum = 0.0;
  const double n = static_cast<double>(prediction.rows());
  if (model.spec.head.kind == HeadKind::regression) {
    for (std::size_t i = 0; i < prediction.rows(); ++i) {
      const double d = prediction(i, 0) - labels[i];
      sum += d * d;
    }
    return sum / n;
  }
  for (std::size_t i = 0; i < prediction.rows(); ++i) {
    const auto r = prediction.row(i);
    const auto best = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    if (static_cast<double>(best) != labels[i]) sum += 1.0;
  }
  return sum / n;
}

std::optional<double> evaluate(const MlpParams& model, const DataView& view) {
  if (view.empty()) return std::nullopt;
  return evaluate_predictions(model, forward(model, view.x).prediction, view.labels);
}

std::vector<Batch> epoch_batches(std::size_t full_rows, std::size_t semi_rows, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> full_order = iota(full_rows);
  std::vector<std::size_t> semi_order = iota(semi_rows);
  rng.shuffle(full_order);
  rng.shuffle(semi_order);
  const auto f = chunks(full_order, batch_size);
  const auto s = chunks(semi_order, batch_size);
  std::vector<Batch> out;
  for (std::size_t i = 0; i < std::max(f.size(), s.size()); ++i) {
    if (i < f.size()) out.push_back({BatchKind::full, f[i]});
    if (i < s.size()) out.push_back({BatchKind::semi, s[i]});
  }
  return out;
}

PretrainReport pretrain_in_place(ModelPair& pair, const TrainingData& data, const PretrainConfig& config) {
  config.validate();
  if (data.train.full.empty() || data.train.semi.empty()) throw WorkflowError("pretrain: empty training view");
  Rng rng(config.seed);
  PretrainReport report;
  for (std::size_t e = 1; e <= config.epochs; ++e) {
    PretrainEpoch ep{e, 0.0, 0.0};
    std::size_t nf = 0;
    std::size_t ns = 0;
    try {
      for (const Batch& b : epoch_batches(data.train.full.size(), data.train.semi.size(), config.batch_size, rng)) {
        const bool full = b.kind == BatchKind::full;
        MlpParams& model = full ? pair.full : pair.semi;
        const TaskStep step = task_step(model, full ? data.train.full : data.train.semi, b.positions);
        if (!std::isfinite(step.loss)) throw TrainingError("non-finite loss");
        model = sgd_step(model, step.grads, config.learning_rate);
        (full ? ep.full_loss : ep.semi_loss) += step.loss;
        ++(full ? nf : ns);
      }
    } catch (const TrainingError& err) {
      throw TrainingError("pretrain diverged at epoch " + std::to_string(e) + ": " + err.what());
    }
    ep.full_loss /= static_cast<double>(std::max<std::size_t>(nf, 1));
    ep.semi_loss /= static_cast<double>(std::max<std::size_t>(ns, 1));
    report.epochs.push_back(ep);
  }
  pair.sync_momentum();
  pair.pretrained = true;
  report.full_validation = evaluate(pair.full, data.validation.full);
  report.semi_validation = evaluate(pair.semi, data.validation.semi);
  return report;
}

PretrainResult pretrain(const TrainingData& data, const MlpSpec& encoder, const PretrainConfig& config) {
  if (data.train.full.empty() || data.train.semi.empty()) throw WorkflowError("pretrain: empty training view");
  PretrainResult out;
  out.pair = ModelPair::create(encoder, data.train.full.width(), data.train.semi.width(), config.seed);
  out.report = pretrain_in_place(out.pair, data, config);
  return out;
}

Representation default_representation(std::optional<double> semi_validation, double threshold) {
  return semi_validation && *semi_validation > threshold ? Representation::raw : Representation::embedding;
}

PositiveMapping build_positive_mapping(const ViewPair& views, const ModelPair& pair, Representation representation,
                                       NoMatchRule rule) {
  if (representation == Representation::raw) {
    const RawRepresentation raw = raw_representation(views.semi, views.full);
    return build_positive_mapping(views.semi, views.full, raw.semi, raw.full, representation, rule);
  }
  if (!pair.pretrained) throw StateError("embedding representation requires a pretrained model pair");
  return build_positive_mapping(views.semi, views.full, embed(pair.semi, views.semi.x), embed(pair.full, views.full.x),
                                representation, rule);
}

std::vector<double> negative_row(const EncodedDataset& ds, const ViewPair& views, const NegativeRef& ref) {
  const DataView& view = ref.view == ViewKind::full ? views.full : views.semi;
  if (ref.row >= ds.rows()) throw NotFoundError("negative row " + std::to_string(ref.row) + " out of range");
  if (!ds.complete_on(ref.row, view.columns)) {
    throw WorkflowError("row " + std::to_string(ref.row) + " is incomplete on the " + to_string(ref.view) +
                        " view columns");
  }
  std::vector<double> out;
  out.reserve(view.dims.size());
  for (std::size_t d : view.dims) out.push_back(ds.features(ref.row, d));
  return out;
}

Matrix negative_embeddings(const EncodedDataset& ds, const ViewPair& views, const ModelPair& pair,
                           const NegativeCollection& negatives) {
  Matrix semi_x(0, views.semi.width());
  Matrix full_x(0, views.full.width());
  std::vector<bool> is_full;
  for (const NegativeEntry& e : negatives.entries()) {
    const std::vector<double> row = negative_row(ds, views, e.ref);
    (e.ref.view == ViewKind::full ? full_x : semi_x).append_row(row);
    is_full.push_back(e.ref.view == ViewKind::full);
  }
  const Matrix es = embed(pair.momentum_semi, semi_x);
  const Matrix ef = embed(pair.momentum_full, full_x);
  Matrix out(is_full.size(), pair.semi.spec.embedding_dim);
  std::size_t si = 0;
  std::size_t fi = 0;
  for (std::size_t i = 0; i < is_full.size(); ++i) {
    const auto src = is_full[i] ? ef.row(fi++) : es.row(si++);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

CandidateSet negative_candidates(const EncodedDataset& ds, const ViewPair& views, const ModelPair& pair,
                                 const std::vector<NegativeRef>& refs, Representation representation) {
  if (representation == Representation::embedding && !pair.pretrained) {
    throw StateError("embedding representation requires a pretrained model pair");
  }
  std::vector<double> mean(views.semi.width(), 0.0);
  for (std::size_t i = 0; i < views.semi.size(); ++i) {
    for (std::size_t d = 0; d < views.semi.width(); ++d) mean[d] += views.semi.x(i, d) / static_cast<double>(views.semi.size());
  }
  CandidateSet out;
  std::vector<NegativeRef> kept;
  std::vector<double> labels;
  const std::size_t width = representation == Representation::embedding ? pair.semi.spec.embedding_dim : views.semi.width();
  out.x = Matrix(0, width);
  for (const NegativeRef& ref : refs) {
    std::vector<double> x;
    if (representation == Representation::embedding) {
      const std::vector<double> row = negative_row(ds, views, ref);
      const MlpParams& model = ref.view == ViewKind::full ? pair.full : pair.semi;
      const Matrix e = embed(model, Matrix(1, row.size(), row));
      x.assign(e.row(0).begin(), e.row(0).end());
    } else {
      x = negative_row(ds, views, NegativeRef{ViewKind::semi, ref.row});
      for (std::size_t d = 0; d < x.size(); ++d) x[d] -= mean[d];
    }
    if (norm(x) == 0.0) {
      out.skipped.push_back(ref);
      continue;
    }
    out.x.append_row(x);
    kept.push_back(ref);
    labels.push_back(ds.labels[ref.row]);
  }
  for (std::size_t i = 0; i < kept.size(); ++i) out.candidates.push_back({kept[i], out.x.row(i), labels[i]});
  return out;
}

ScoreStats metrics_snapshot(const TrainingData& data, const ModelPair& pair, const PositiveMapping& mapping,
                            const NegativeCollection& negatives, std::size_t probe_limit) {
  const DataView& semi = data.train.semi;
  const DataView& full = data.train.full;
  std::vector<std::size_t> probe;
  const std::size_t n = semi.size();
  const std::size_t count = std::min(n, probe_limit);
  for (std::size_t i = 0; i < count; ++i) probe.push_back(i * n / count);

  const Matrix q = embed(pair.semi, semi.x.gather_rows(probe));
  std::vector<std::size_t> mapped_probe;
  std::vector<std::size_t> positive_positions;
  if (mapping.matches.size() == n) {
    for (std::size_t j = 0; j < probe.size(); ++j) {
      const PositiveMatch& m = mapping.matches[probe[j]];
      if (m.mu <= 0.0) continue;
      mapped_probe.push_back(j);
      positive_positions.push_back(full.position(m.full_row));
    }
  }
  const Matrix pos = embed(pair.full, full.x.gather_rows(positive_positions));
  const ScoreStats p = score_stats(q.gather_rows(mapped_probe), pos, Matrix(0, q.cols()));

  ScoreStats out;
  if (!negatives.empty()) {
    const Matrix neg = negative_embeddings(*data.dataset, data.train, pair, negatives);
    out = score_stats(q, Matrix(0, q.cols()), neg);
  }
  out.mean_pos = p.mean_pos;
  return out;
}

SamplingState plan_sampling(const TrainingData& data, const ModelPair& pair, std::optional<double> semi_validation,
                            const SamplingPlan& plan) {
  SamplingState st;
  const Representation rep = plan.representation.value_or(default_representation(semi_validation));
  st.mapping = build_positive_mapping(data.train, pair, rep, plan.rule);
  std::vector<NegativeRef> refs;
  for (std::size_t r : data.train.semi.rows) refs.push_back({ViewKind::semi, r});
  const CandidateSet cs = negative_candidates(*data.dataset, data.train, pair, refs, rep);
  sample_negatives(st.negatives, cs.candidates, plan.negatives, plan.seed);
  return st;
}

namespace {

struct NegativeFeed {
  std::vector<ViewKind> views;
  std::vector<std::vector<double>> rows;
  std::size_t cursor = 0;
};

NegativeBank bank_from_queues(const NegativeQueues& queues, const ModelPair& pair) {
  const Matrix es = embed(pair.momentum_semi, queues.semi.contents());
  const Matrix ef = embed(pair.momentum_full, queues.full.contents());
  Matrix all(0, pair.semi.spec.embedding_dim);
  for (const Matrix* m : {&es, &ef}) {
    for (std::size_t i = 0; i < m->rows(); ++i) {
      if (norm(m->row(i)) > 0.0) all.append_row(m->row(i));
    }
  }
  return NegativeBank(all);
}

struct EpochTotals {
  double total = 0.0;
  double task = 0.0;
  double contrastive = 0.0;
  std::size_t batches = 0;
};

}  // namespace

TrainRecorder train(ModelPair& pair, const TrainingData& data, const SamplingState& sampling,
                    const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (data.dataset == nullptr) throw WorkflowError("train: training data has no dataset");
  if (data.train.full.empty() || data.train.semi.empty()) throw WorkflowError("train: empty training view");
  if (sampling.mapping.matches.size() != data.train.semi.size()) {
    throw WorkflowError("train: positive mapping is not set for the current semi view");
  }
  if (pair.full.spec.input_dim != data.train.full.width() || pair.semi.spec.input_dim != data.train.semi.width()) {
    throw ShapeError("train: model pair input widths do not match the views");
  }

  NegativeFeed feed;
  for (const NegativeEntry& e : sampling.negatives.entries()) {
    feed.views.push_back(e.ref.view);
    feed.rows.push_back(negative_row(*data.dataset, data.train, e.ref));
  }
  NegativeQueues queues(config.queue_capacity, data.train.semi.width(), data.train.full.width());
  Rng rng(config.seed);
  TrainRecorder recorder;
  std::size_t streak = 0;

  auto record = [&](std::size_t epoch, const EpochTotals& t) {
    EpochMetrics m;
    m.epoch = epoch;
    const double nb = static_cast<double>(std::max<std::size_t>(t.batches, 1));
    m.train_loss = t.total / nb;
    m.task_loss = t.task / nb;
    m.contrastive_loss = t.contrastive / nb;
    m.validation_metric = evaluate(pair.semi, data.validation.semi);
    m.full_validation_metric = evaluate(pair.full, data.validation.full);
    const ScoreStats s = metrics_snapshot(data, pair, sampling.mapping, sampling.negatives);
    m.mean_pos = s.mean_pos;
    m.mean_neg = s.mean_neg;
    m.var_neg = s.var_neg;
    streak = hooks.collapse.offending(m) ? streak + 1 : 0;
    m.collapse_flag = streak >= hooks.collapse.window;
    if (m.collapse_flag && !recorder.collapse.collapsed) recorder.collapse = {true, epoch};
    recorder.epochs.push_back(m);
    if (hooks.on_epoch) hooks.on_epoch(m);
  };

  auto run_batch = [&](const Batch& b, bool step, EpochTotals& t) {
    const NegativeBank bank = bank_from_queues(queues, pair);
    const ObjectiveInputs in{data.train,        sampling.mapping, bank, pair, config.temperature,
                             config.contrastive_weight};
    const ObjectiveResult r = combined_loss(b, in);
    if (!std::isfinite(r.total)) throw TrainingError("non-finite loss");
    t.total += r.total;
    t.task += r.task;
    t.contrastive += r.contrastive;
    ++t.batches;
    if (!step) return;
    if (b.kind == BatchKind::full) pair.full = sgd_step(pair.full, r.grad_full, config.learning_rate);
    if (r.contrastive_terms > 0 || b.kind == BatchKind::semi) {
      pair.semi = sgd_step(pair.semi, r.grad_semi, config.learning_rate);
    }
    momentum_update(pair, config.momentum);
    if (!feed.rows.empty()) {
      for (std::size_t k = 0; k < config.batch_size && k < feed.rows.size(); ++k) {
        const std::size_t i = feed.cursor;
        feed.cursor = (feed.cursor + 1) % feed.rows.size();
        queues.of(feed.views[i]).push(std::span<const double>(feed.rows[i]));
      }
    }
  };

  if (config.epochs == 0) {
    EpochTotals t;
    for (const Batch& b : epoch_batches(data.train.full.size(), data.train.semi.size(), config.batch_size, rng)) {
      run_batch(b, false, t);
    }
    record(0, t);
    return recorder;
  }

  for (std::size_t e = 1; e <= config.epochs; ++e) {
    const ModelPair epoch_start = pair;
    EpochTotals t;
    try {
      for (const Batch& b : epoch_batches(data.train.full.size(), data.train.semi.size(), config.batch_size, rng)) {
        if (hooks.stop != nullptr && hooks.stop->load()) {
          recorder.stopped = true;
          break;
        }
        run_batch(b, true, t);
      }
    } catch (const TrainingError& err) {
      pair = epoch_start;
      throw TrainingError("training diverged at epoch " + std::to_string(e) + ": " + err.what());
    }
    if (t.batches > 0 || recorder.epochs.empty()) record(e, t);
    if (recorder.stopped) break;
  }
  return recorder;
}

}  // namespace civ
