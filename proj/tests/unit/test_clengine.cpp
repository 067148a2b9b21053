#include <doctest.h>

#include <atomic>
#include <cmath>
#include <memory>
#include <numeric>

#include "civ/clengine/checkpoint.hpp"
#include "civ/clengine/config.hpp"
#include "civ/clengine/info_nce.hpp"
#include "civ/clengine/metrics.hpp"
#include "civ/clengine/model_pair.hpp"
#include "civ/clengine/objective.hpp"
#include "civ/clengine/serialize.hpp"
#include "civ/clengine/trainer.hpp"
#include "civ/dataio/encode.hpp"
#include "civ/dataio/split.hpp"
#include "civ/dataio/synth.hpp"
#include "civ/error.hpp"
#include "civ/numcore/gradcheck.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace civ;
using civtest::plain_cosine;
using civtest::random_matrix;
using civtest::random_vector;
using civtest::oracle_info_nce;
using civtest::row_of;

namespace {

struct Workspace {
  std::unique_ptr<EncodedDataset> ds;
  TrainingData data;
  std::vector<std::string> selected;
};

Workspace synthetic_workspace(std::size_t rows, std::uint64_t seed, Task task = Task::regression) {
  SynthSpec spec;
  spec.rows = rows;
  spec.seed = seed;
  spec.task = task;
  const RawTable t = synth_generate(spec);
  Workspace w;
  w.ds = std::make_unique<EncodedDataset>(encode(t));
  const auto missing = synth_missing_columns(spec);
  for (const auto& n : t.feature_names())
    if (std::find(missing.begin(), missing.end(), n) == missing.end()) w.selected.push_back(n);
  SplitSpec split;
  split.policy = SplitPolicy::seeded_shuffle;
  split.seed = seed;
  const Split s = split_rows(rows, split);
  w.data = make_training_data(*w.ds, w.selected, s.train, s.validation);
  return w;
}

MlpSpec small_encoder() {
  MlpSpec spec;
  spec.hidden_dims = {8, 4};
  spec.embedding_dim = 4;
  return spec;
}

// 8 records: 4 complete, 4 missing the unselected column.
Workspace toy_workspace(Rng& rng) {
  RawTable t;
  t.columns = {"a", "b", "c", "y"};
  t.kinds.assign(4, ColumnKind::numeric);
  t.label = "y";
  for (std::size_t r = 0; r < 8; ++r) {
    t.rows.push_back({rng.uniform(), rng.uniform(), r % 2 ? Cell{} : Cell{rng.uniform()}, rng.uniform(0, 5)});
  }
  Workspace w;
  w.ds = std::make_unique<EncodedDataset>(encode(t));
  w.selected = {"a", "b"};
  std::vector<std::size_t> rows(8);
  std::iota(rows.begin(), rows.end(), 0);
  w.data = make_training_data(*w.ds, w.selected, rows, rows);
  return w;
}

ModelPair constant_embedding_pair(const TrainingData& data, std::size_t dim) {
  MlpSpec spec;
  spec.hidden_dims = {3, dim};
  spec.embedding_dim = dim;
  ModelPair p;
  p.full = MlpParams::zeros(with_input_dim(spec, data.train.full.width()));
  p.semi = MlpParams::zeros(with_input_dim(spec, data.train.semi.width()));
  for (MlpParams* m : {&p.full, &p.semi})
    for (std::size_t d = 0; d < dim; ++d) m->layers[1].bias[d] = -0.5 - 0.1 * static_cast<double>(d);
  p.sync_momentum();
  p.pretrained = true;
  return p;
}

SamplingState random_sampling(const TrainingData& data, const ModelPair& pair, double rate, std::uint64_t seed) {
  SamplingPlan plan;
  plan.representation = Representation::embedding;
  plan.negatives = {NegativeStrategy::random, rate};
  plan.seed = seed;
  return plan_sampling(data, pair, std::nullopt, plan);
}

}  // namespace

TEST_CASE("info_nce analytic values") {
  const std::vector<double> q{1, 0}, kp{1, 0};
  CHECK(info_nce(q, kp, Matrix(0, 2), 1.0).loss == 0.0);
  CHECK(info_nce(q, kp, Matrix{{0, 1}}, 1.0).loss == doctest::Approx(std::log(1 + std::exp(-1.0))).epsilon(1e-14));
  CHECK(std::log(1 + std::exp(-1.0)) == doctest::Approx(0.3133).epsilon(1e-4));
  Rng rng(1);
  for (std::size_t k : {1, 4, 16}) {
    const auto qq = random_vector(rng, 3);
    Matrix negs(k, 3);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t d = 0; d < 3; ++d) negs(i, d) = qq[d] * (1.0 + static_cast<double>(i));
    for (double t : {0.07, 1.0, 5.0})
      CHECK(std::abs(info_nce(qq, qq, negs, t).loss - std::log(1.0 + static_cast<double>(k))) < 1e-9);
  }
}

TEST_CASE("info_nce matches the textbook formula and finite differences") {
  const std::vector<std::size_t> ks{0, 1, 8, 0, 1, 8, 3, 5, 2, 8, 1, 0, 4, 6, 7, 8, 2, 1, 3, 0, 8, 5};
  for (std::size_t c = 0; c < ks.size(); ++c) {
    CAPTURE(c);
    Rng rng(40 + c);
    const std::size_t d = 2 + rng.below(7);
    const auto q = random_vector(rng, d);
    const auto kp = random_vector(rng, d);
    const Matrix negs = random_matrix(rng, ks[c], d);
    const double t = rng.uniform(0.2, 2.0);
    const auto r = info_nce(q, kp, negs, t);
    CHECK(std::abs(r.loss - oracle_info_nce(q, kp, negs, t)) < 1e-12);
    const NegativeBank bank(negs.rows() ? NegativeBank(negs) : NegativeBank{});
    const Objective f = [&](std::span<const double> x) {
      const auto out = info_nce(x, kp, bank, t);
      return ValueAndGradient{out.loss, out.grad_q};
    };
    CHECK(finite_diff_check(f, q, 1e-4).pass);
  }
}

TEST_CASE("info_nce properties") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto q = random_vector(rng, 4);
    const auto kp = random_vector(rng, 4);
    const Matrix negs = random_matrix(rng, 5, 4);
    const double base = info_nce(q, kp, negs, 0.5).loss;
    auto scaled = q;
    const double factor = rng.uniform(0.01, 100.0);
    for (double& v : scaled) v *= factor;
    CHECK(std::abs(info_nce(scaled, kp, negs, 0.5).loss - base) < 1e-12);

    // Rotating one negative toward q raises its similarity and the loss.
    Matrix closer = negs;
    for (std::size_t dd = 0; dd < 4; ++dd) closer(2, dd) = 0.5 * negs(2, dd) + 0.5 * q[dd] * norm(negs.row(2)) / norm(q);
    const double s_old = plain_cosine(q, row_of(negs, 2));
    const double s_new = plain_cosine(q, row_of(closer, 2));
    if (s_new > s_old) CHECK(info_nce(q, kp, closer, 0.5).loss > base);
  }
  const std::vector<double> zero{0, 0}, one{1, 0};
  CHECK_THROWS_AS(info_nce(zero, one, Matrix(0, 2), 1.0), DegenerateInputError);
  CHECK_THROWS_AS(info_nce(one, zero, Matrix(0, 2), 1.0), DegenerateInputError);
  CHECK_THROWS_AS(NegativeBank(Matrix{{0, 0}}), DegenerateInputError);
  CHECK_THROWS_AS(info_nce(one, one, Matrix(0, 2), 0.0), ConfigError);
  CHECK_THROWS_AS(info_nce(one, one, Matrix{{1, 2, 3}}, 1.0), ShapeError);
  // Very small temperatures stay finite thanks to the max-logit shift.
  const auto sharp = info_nce(one, std::vector<double>{0, 1}, Matrix{{1, 0}}, 1e-4);
  CHECK(std::isfinite(sharp.loss));
  CHECK(sharp.loss == doctest::Approx(1e4).epsilon(1e-9));
}

TEST_CASE("momentum update semantics") {
  Rng rng(3);
  const MlpSpec spec = civtest::random_spec(rng, 3);
  const MlpParams src = MlpParams::init(spec, 1);
  const MlpParams mom = MlpParams::init(spec, 2);
  CHECK(momentum_update(mom, src, 0.0) == src);
  CHECK(momentum_update(mom, src, 1.0) == mom);
  for (double m : {0.1, 0.5, 0.9, 0.99}) {
    const auto next = momentum_update(mom, src, m);
    const auto a = flatten(next), b = flatten(src), c = flatten(mom);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs((a[i] - b[i]) - m * (c[i] - b[i])) < 1e-12);
  }
  MlpParams zeros = MlpParams::zeros(spec);
  MlpParams ones = zeros;
  for (auto& l : ones.layers) {
    for (double& v : l.weight.data()) v = 1.0;
    for (double& v : l.bias) v = 1.0;
  }
  for (double v : flatten(momentum_update(zeros, ones, 0.99))) CHECK(v == doctest::Approx(0.01).epsilon(1e-14));
  CHECK_THROWS_AS(momentum_update(mom, src, 1.5), ConfigError);

  ModelPair pair = ModelPair::create(spec, 3, 2, 0);
  CHECK(pair.momentum_full == pair.full);
  CHECK(pair.momentum_semi == pair.semi);
  pair.full.layers[0].bias[0] += 1.0;
  momentum_update(pair, 0.5);
  CHECK(pair.momentum_full.layers[0].bias[0] == doctest::Approx(pair.full.layers[0].bias[0] - 0.5));
}

TEST_CASE("configuration validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.epochs = 0;
  CHECK_NOTHROW(c.validate());
  for (auto mutate : std::vector<void (*)(TrainConfig&)>{
           [](TrainConfig& x) { x.temperature = 0.0; }, [](TrainConfig& x) { x.contrastive_weight = -1.0; },
           [](TrainConfig& x) { x.momentum = 1.01; }, [](TrainConfig& x) { x.batch_size = 0; },
           [](TrainConfig& x) { x.learning_rate = 0.0; }, [](TrainConfig& x) { x.queue_capacity = 0; }}) {
    TrainConfig bad;
    mutate(bad);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
  PretrainConfig p;
  p.batch_size = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("combined loss with zero weight equals the task loss bitwise") {
  Rng rng(8);
  Workspace w = toy_workspace(rng);
  ModelPair pair = ModelPair::create(small_encoder(), w.data.train.full.width(), w.data.train.semi.width(), 4);
  pair.pretrained = true;
  const PositiveMapping mapping = build_positive_mapping(w.data.train, pair, Representation::embedding);
  const NegativeBank bank(random_matrix(rng, 3, 4));
  const ObjectiveInputs in{w.data.train, mapping, bank, pair, 1.0, 0.0};

  std::vector<std::size_t> semi_pos(w.data.train.semi.size());
  std::iota(semi_pos.begin(), semi_pos.end(), 0);
  const ObjectiveResult rs = combined_loss({BatchKind::semi, semi_pos}, in);
  const TaskStep ts = task_step(pair.semi, w.data.train.semi, semi_pos);
  CHECK(rs.total == ts.loss);
  CHECK(flatten(rs.grad_semi) == flatten(ts.grads));
  for (double v : flatten(rs.grad_full)) CHECK(v == 0.0);
  CHECK(rs.contrastive_terms == 0);

  std::vector<std::size_t> full_pos(w.data.train.full.size());
  std::iota(full_pos.begin(), full_pos.end(), 0);
  const ObjectiveResult rf = combined_loss({BatchKind::full, full_pos}, in);
  const TaskStep tf = task_step(pair.full, w.data.train.full, full_pos);
  CHECK(rf.total == tf.loss);
  CHECK(flatten(rf.grad_full) == flatten(tf.grads));
  for (double v : flatten(rf.grad_semi)) CHECK(v == 0.0);
}

TEST_CASE("rows without a positive contribute nothing") {
  Rng rng(9);
  Workspace w = toy_workspace(rng);
  ModelPair pair = ModelPair::create(small_encoder(), w.data.train.full.width(), w.data.train.semi.width(), 5);
  pair.pretrained = true;
  PositiveMapping mapping = build_positive_mapping(w.data.train, pair, Representation::embedding);
  for (auto& m : mapping.matches) {
    m.mu = 0.0;
    m.full_row = PositiveMatch::none;
  }
  const NegativeBank bank(random_matrix(rng, 3, 4));
  const ObjectiveInputs in{w.data.train, mapping, bank, pair, 1.0, 0.1};
  std::vector<std::size_t> pos(w.data.train.semi.size());
  std::iota(pos.begin(), pos.end(), 0);
  const ObjectiveResult r = combined_loss({BatchKind::semi, pos}, in);
  const TaskStep ts = task_step(pair.semi, w.data.train.semi, pos);
  CHECK(r.contrastive == 0.0);
  CHECK(r.total == ts.loss);
  const auto a = flatten(r.grad_semi), b = flatten(ts.grads);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("combined loss matches a straight-line re-derivation and finite differences") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    CAPTURE(seed);
    Rng rng(60 + seed);
    Workspace w = toy_workspace(rng);
    const auto& v = w.data.train;
    ModelPair pair = ModelPair::create(small_encoder(), v.full.width(), v.semi.width(), seed);
    if (seed % 2) {
      pair.full.spec.activation = pair.semi.spec.activation = Activation::tanh;
      pair.sync_momentum();
    }
    pair.pretrained = true;
    const PositiveMapping mapping = build_positive_mapping(v, pair, Representation::embedding);
    const Matrix negs = random_matrix(rng, 1 + rng.below(6), 4);
    const NegativeBank bank(negs);
    const double temp = rng.uniform(0.3, 1.5);
    const double weight = rng.uniform(0.05, 2.0);

    std::vector<std::size_t> semi_pos(v.semi.size());
    std::iota(semi_pos.begin(), semi_pos.end(), 0);
    std::vector<std::size_t> full_pos(v.full.size());
    std::iota(full_pos.begin(), full_pos.end(), 0);

    // Semi batch, computed directly.
    {
      const auto fs = forward(pair.semi, v.semi.x);
      const auto ff = forward(pair.full, v.full.x);
      double task = 0.0, con = 0.0;
      const double n = static_cast<double>(v.semi.size());
      for (std::size_t i = 0; i < v.semi.size(); ++i) {
        const double d = fs.prediction(i, 0) - v.semi.labels[i];
        task += d * d / n;
        const auto& m = mapping.matches[i];
        if (m.mu == 0.0) continue;
        con += m.mu * oracle_info_nce(row_of(fs.embedding, i), row_of(ff.embedding, v.full.position(m.full_row)), negs,
                                      temp) / n;
      }
      const ObjectiveInputs in{v, mapping, bank, pair, temp, weight};
      const ObjectiveResult r = combined_loss({BatchKind::semi, semi_pos}, in);
      CHECK(std::abs(r.task - task) < 1e-12);
      CHECK(std::abs(r.contrastive - con) < 1e-12);
      CHECK(std::abs(r.total - (task + weight * con)) < 1e-12);
    }
    // Full batch: semi model sees the full rows on its columns with mu = 1.
    {
      const auto ff = forward(pair.full, v.full.x);
      const auto fs = forward(pair.semi, v.full.x.gather_cols(v.semi.dims));
      double con = 0.0;
      for (std::size_t i = 0; i < v.full.size(); ++i)
        con += oracle_info_nce(row_of(fs.embedding, i), row_of(ff.embedding, i), negs, temp) /
               static_cast<double>(v.full.size());
      const ObjectiveInputs in{v, mapping, bank, pair, temp, weight};
      const ObjectiveResult r = combined_loss({BatchKind::full, full_pos}, in);
      CHECK(std::abs(r.contrastive - con) < 1e-12);
      CHECK(r.contrastive_terms == v.full.size());
    }

    for (BatchKind kind : {BatchKind::semi, BatchKind::full}) {
      const Batch batch{kind, kind == BatchKind::semi ? semi_pos : full_pos};
      const Objective f_semi = [&](std::span<const double> theta) {
        ModelPair p = pair;
        p.semi = unflatten(pair.semi.spec, theta);
        const ObjectiveInputs in{v, mapping, bank, p, temp, weight};
        const ObjectiveResult r = combined_loss(batch, in);
        return ValueAndGradient{r.total, flatten(r.grad_semi)};
      };
      CHECK(finite_diff_check(f_semi, flatten(pair.semi), 1e-4).pass);
    }
    // Positives are keys, so the full model's gradient is its task gradient.
    const Objective f_full = [&](std::span<const double> theta) {
      ModelPair p = pair;
      p.full = unflatten(pair.full.spec, theta);
      const ObjectiveInputs in{v, mapping, bank, p, temp, weight};
      const ObjectiveResult r = combined_loss({BatchKind::full, full_pos}, in);
      return ValueAndGradient{r.task, flatten(r.grad_full)};
    };
    CHECK(finite_diff_check(f_full, flatten(pair.full), 1e-4).pass);
  }
}

TEST_CASE("combined loss preconditions") {
  Rng rng(1);
  Workspace w = toy_workspace(rng);
  ModelPair pair = ModelPair::create(small_encoder(), w.data.train.full.width(), w.data.train.semi.width(), 0);
  const PositiveMapping empty;
  const NegativeBank bank;
  CHECK_THROWS_AS(combined_loss({BatchKind::semi, {0}}, {w.data.train, empty, bank, pair, 1.0, 0.1}), WorkflowError);
  pair.pretrained = true;
  const PositiveMapping mapping = build_positive_mapping(w.data.train, pair, Representation::embedding);
  CHECK_THROWS_AS(combined_loss({BatchKind::semi, {}}, {w.data.train, mapping, bank, pair, 1.0, 0.1}), ContractError);
  ModelPair fresh = ModelPair::create(small_encoder(), w.data.train.full.width(), w.data.train.semi.width(), 0);
  CHECK_THROWS_AS(build_positive_mapping(w.data.train, fresh, Representation::embedding), StateError);
  CHECK_NOTHROW(build_positive_mapping(w.data.train, fresh, Representation::raw));
}

TEST_CASE("epoch batches alternate and cover every row once") {
  Rng rng(2);
  const auto batches = epoch_batches(10, 23, 4, rng);
  std::vector<int> full_seen(10), semi_seen(23);
  for (std::size_t i = 0; i < batches.size(); ++i) {
    if (i < 6) CHECK(batches[i].kind == (i % 2 ? BatchKind::semi : BatchKind::full));
    for (std::size_t p : batches[i].positions) ++(batches[i].kind == BatchKind::full ? full_seen[p] : semi_seen[p]);
    CHECK(batches[i].positions.size() <= 4);
  }
  for (int c : full_seen) CHECK(c == 1);
  for (int c : semi_seen) CHECK(c == 1);
  CHECK(batches.size() == 3 + 6);
}

TEST_CASE("score statistics equal brute-force loops") {
  Rng rng(3);
  const Matrix q = random_matrix(rng, 4, 3);
  const Matrix p = random_matrix(rng, 4, 3);
  const Matrix n = random_matrix(rng, 3, 3);
  const ScoreStats s = score_stats(q, p, n);
  double pos = 0.0;
  for (std::size_t i = 0; i < 4; ++i) pos += plain_cosine(row_of(q, i), row_of(p, i)) / 4.0;
  std::vector<double> sims;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) sims.push_back(plain_cosine(row_of(q, i), row_of(n, j)));
  double mean = 0.0;
  for (double v : sims) mean += v / 12.0;
  double var = 0.0;
  for (double v : sims) var += (v - mean) * (v - mean) / 12.0;
  CHECK(std::abs(*s.mean_pos - pos) < 1e-12);
  CHECK(std::abs(*s.mean_neg - mean) < 1e-12);
  CHECK(std::abs(*s.var_neg - var) < 1e-12);

  const ScoreStats ortho = score_stats(Matrix{{1, 0}, {2, 0}}, Matrix(0, 2), Matrix{{0, 1}, {0, -3}});
  CHECK(*ortho.mean_neg == 0.0);
  CHECK(*ortho.var_neg == 0.0);
  CHECK_FALSE(ortho.mean_pos.has_value());

  const ScoreStats same = score_stats(Matrix{{1, 2}, {1, 2}}, Matrix{{2, 4}, {1, 2}}, Matrix{{3, 6}});
  CHECK(*same.mean_pos == doctest::Approx(1.0));
  CHECK(*same.mean_neg == doctest::Approx(1.0));
  CHECK(*same.var_neg == doctest::Approx(0.0));

  const ScoreStats none = score_stats(q, Matrix(0, 3), Matrix(0, 3));
  CHECK_FALSE(none.mean_neg.has_value());
  CHECK_FALSE(none.var_neg.has_value());
}

TEST_CASE("metrics snapshot equals a brute-force evaluation") {
  Workspace w = synthetic_workspace(120, 1);
  PretrainConfig pc;
  pc.epochs = 2;
  const PretrainResult pre = pretrain(w.data, small_encoder(), pc);
  const SamplingState st = random_sampling(w.data, pre.pair, 0.2, 3);
  const ScoreStats s = metrics_snapshot(w.data, pre.pair, st.mapping, st.negatives, 7);

  const auto& semi = w.data.train.semi;
  const auto& full = w.data.train.full;
  std::vector<std::size_t> probe;
  for (std::size_t i = 0; i < 7; ++i) probe.push_back(i * semi.size() / 7);
  const Matrix q = forward(pre.pair.semi, semi.x.gather_rows(probe)).embedding;
  double pos = 0.0;
  std::size_t np = 0;
  for (std::size_t j = 0; j < probe.size(); ++j) {
    const auto& m = st.mapping.matches[probe[j]];
    if (m.mu == 0.0) continue;
    const std::vector<std::size_t> one{full.position(m.full_row)};
    const Matrix k = forward(pre.pair.full, full.x.gather_rows(one)).embedding;
    pos += plain_cosine(row_of(q, j), row_of(k, 0));
    ++np;
  }
  std::vector<double> sims;
  for (const auto& e : st.negatives.entries()) {
    const auto row = negative_row(*w.ds, w.data.train, e.ref);
    const MlpParams& enc = e.ref.view == ViewKind::semi ? pre.pair.momentum_semi : pre.pair.momentum_full;
    const Matrix k = forward(enc, Matrix(1, row.size(), row)).embedding;
    for (std::size_t j = 0; j < probe.size(); ++j) sims.push_back(plain_cosine(row_of(q, j), row_of(k, 0)));
  }
  double mean = 0.0;
  for (double v : sims) mean += v / static_cast<double>(sims.size());
  REQUIRE(np > 0);
  CHECK(std::abs(*s.mean_pos - pos / static_cast<double>(np)) < 1e-12);
  CHECK(std::abs(*s.mean_neg - mean) < 1e-12);

  const ScoreStats empty = metrics_snapshot(w.data, pre.pair, st.mapping, NegativeCollection{});
  CHECK_FALSE(empty.mean_neg.has_value());
  CHECK(empty.mean_pos.has_value());
}

TEST_CASE("collapse detection rule") {
  auto stream = [](std::size_t n, auto healthy_at) {
    std::vector<EpochMetrics> out;
    for (std::size_t e = 1; e <= n; ++e) {
      EpochMetrics m;
      m.epoch = e;
      const bool h = healthy_at(e);
      m.mean_pos = h ? 0.7 : 1.0;
      m.mean_neg = h ? 0.5 : 0.999;
      m.var_neg = h ? 0.05 : 0.0;
      out.push_back(m);
    }
    return out;
  };
  const auto constant = stream(8, [](std::size_t) { return false; });
  CHECK(detect_collapse(constant).collapsed);
  CHECK(detect_collapse(constant).first_offending_epoch == 5);
  const auto healthy = stream(30, [](std::size_t) { return true; });
  CHECK_FALSE(detect_collapse(healthy).collapsed);
  const auto crossing = stream(20, [](std::size_t e) { return e < 12; });
  CHECK(detect_collapse(crossing).first_offending_epoch == 16);
  const auto broken = stream(20, [](std::size_t e) { return e < 12 || e == 14; });
  CHECK(detect_collapse(broken).first_offending_epoch == 19);
  const auto short_run = stream(4, [](std::size_t) { return false; });
  CHECK_FALSE(detect_collapse(short_run).collapsed);

  EpochMetrics absent;
  absent.mean_pos = 1.0;
  absent.mean_neg = 1.0;
  CHECK_FALSE(CollapseRule{}.offending(absent));
  CHECK_THROWS_AS(detect_collapse(constant, CollapseRule{0, 0.9, 0.1}), ConfigError);
  CHECK(detect_collapse(constant, CollapseRule{2, 0.995, 1e-4}).first_offending_epoch == 2);
}

TEST_CASE("training on the constant-embedding fixture is flagged") {
  Workspace w = synthetic_workspace(100, 2);
  ModelPair pair = constant_embedding_pair(w.data, 3);
  const SamplingState st = random_sampling(w.data, pair, 0.3, 1);
  TrainConfig cfg;
  cfg.epochs = 7;
  const TrainRecorder rec = train(pair, w.data, st, cfg);
  REQUIRE(rec.epochs.size() == 7);
  CHECK(rec.collapse.collapsed);
  CHECK(rec.collapse.first_offending_epoch == 5);
  for (const auto& m : rec.epochs) {
    CHECK(*m.mean_pos == doctest::Approx(1.0));
    CHECK(*m.mean_neg == doctest::Approx(1.0));
    CHECK(*m.var_neg <= 1e-12);
    CHECK(m.collapse_flag == (m.epoch >= 5));
  }
  CHECK(detect_collapse(rec.epochs).first_offending_epoch == 5);
}

TEST_CASE("ordinary training is never flagged") {
  Workspace w = synthetic_workspace(200, 3);
  PretrainConfig pc;
  pc.epochs = 5;
  PretrainResult pre = pretrain(w.data, small_encoder(), pc);
  const SamplingState st = random_sampling(w.data, pre.pair, 0.3, 2);
  TrainConfig cfg;
  cfg.epochs = 8;
  const TrainRecorder rec = train(pre.pair, w.data, st, cfg);
  CHECK_FALSE(rec.collapse.collapsed);
  for (const auto& m : rec.epochs) {
    CHECK(*m.mean_neg < 0.995);
    CHECK(*m.mean_neg >= -1.0);
    CHECK(*m.var_neg >= 0.0);
    CHECK(*m.mean_pos <= 1.0);
    CHECK_FALSE(m.collapse_flag);
  }
}

TEST_CASE("zero-epoch training records one entry and leaves parameters alone") {
  Workspace w = synthetic_workspace(100, 4);
  PretrainConfig pc;
  pc.epochs = 1;
  PretrainResult pre = pretrain(w.data, small_encoder(), pc);
  const SamplingState st = random_sampling(w.data, pre.pair, 0.5, 0);
  const ModelPair before = pre.pair;
  TrainConfig cfg;
  cfg.epochs = 0;
  std::size_t calls = 0;
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochMetrics&) { ++calls; };
  const TrainRecorder rec = train(pre.pair, w.data, st, cfg, hooks);
  REQUIRE(rec.epochs.size() == 1);
  CHECK(rec.epochs[0].epoch == 0);
  CHECK(calls == 1);
  CHECK(pre.pair == before);
  CHECK(rec.epochs[0].validation_metric.has_value());
}

TEST_CASE("training is deterministic and improves the semi model") {
  auto run = [] {
    Workspace w = synthetic_workspace(300, 5);
    PretrainConfig pc;
    pc.epochs = 3;
    PretrainResult pre = pretrain(w.data, MlpSpec{}, pc);
    SamplingPlan plan;
    const SamplingState st = plan_sampling(w.data, pre.pair, pre.report.semi_validation, plan);
    TrainConfig cfg;
    cfg.epochs = 0;
    const double before = *train(pre.pair, w.data, st, cfg).epochs[0].validation_metric;
    cfg.epochs = 100;
    cfg.contrastive_weight = 0.1;
    cfg.temperature = 1.0;
    TrainRecorder rec = train(pre.pair, w.data, st, cfg);
    return std::make_tuple(before, rec, serialize_checkpoint({cfg, rec.epochs.back(), pre.pair, st}));
  };
  const auto [before_a, rec_a, bytes_a] = run();
  const auto [before_b, rec_b, bytes_b] = run();
  CHECK(rec_a.epochs == rec_b.epochs);
  CHECK(bytes_a == bytes_b);
  CHECK(*rec_a.epochs.back().validation_metric < before_a);
  CHECK(rec_a.epochs.size() == 100);
  CHECK(rec_a.epochs.front().epoch == 1);
}

TEST_CASE("stop requests end training between batches") {
  Workspace w = synthetic_workspace(150, 6);
  PretrainConfig pc;
  pc.epochs = 1;
  PretrainResult pre = pretrain(w.data, small_encoder(), pc);
  const SamplingState st = random_sampling(w.data, pre.pair, 0.3, 0);
  std::atomic<bool> stop{false};
  TrainHooks hooks;
  hooks.stop = &stop;
  hooks.on_epoch = [&](const EpochMetrics& m) {
    if (m.epoch == 2) stop = true;
  };
  TrainConfig cfg;
  cfg.epochs = 10;
  const TrainRecorder rec = train(pre.pair, w.data, st, cfg, hooks);
  CHECK(rec.stopped);
  CHECK(rec.epochs.size() == 2);
  stop = true;
  const TrainRecorder none = train(pre.pair, w.data, st, cfg, hooks);
  CHECK(none.stopped);
  CHECK(none.epochs.size() == 1);
}

TEST_CASE("divergence restores the epoch-start parameters") {
  Workspace w = synthetic_workspace(100, 7);
  PretrainConfig pc;
  pc.epochs = 1;
  PretrainResult pre = pretrain(w.data, small_encoder(), pc);
  const SamplingState st = random_sampling(w.data, pre.pair, 0.3, 0);
  const ModelPair before = pre.pair;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 1e300;
  try {
    (void)train(pre.pair, w.data, st, cfg);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
  CHECK(pre.pair == before);

  PretrainConfig bad;
  bad.epochs = 2;
  bad.learning_rate = 1e300;
  try {
    (void)pretrain(w.data, small_encoder(), bad);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("pretrain diverged at epoch 1") != std::string::npos);
  }
}

TEST_CASE("pretraining") {
  Workspace w = synthetic_workspace(100, 8);
  PretrainConfig zero;
  zero.epochs = 0;
  const PretrainResult r0 = pretrain(w.data, small_encoder(), zero);
  const ModelPair expected =
      ModelPair::create(small_encoder(), w.data.train.full.width(), w.data.train.semi.width(), zero.seed);
  CHECK(r0.pair.full == expected.full);
  CHECK(r0.pair.semi == expected.semi);
  CHECK(r0.pair.momentum_semi == r0.pair.semi);
  CHECK(r0.pair.pretrained);
  CHECK(r0.report.epochs.empty());
  CHECK(r0.report.semi_validation.has_value());
  CHECK(r0.report.full_validation.has_value());

  CHECK(default_representation(0.3) == Representation::raw);
  CHECK(default_representation(0.1) == Representation::embedding);
  CHECK(default_representation(std::nullopt) == Representation::embedding);
  CHECK(default_representation(0.3, 0.5) == Representation::embedding);
}

TEST_CASE("linearly separable classification pretrains below 0.2 error") {
  Rng rng(11);
  RawTable t;
  t.columns = {"x0", "x1", "x2", "gap", "y"};
  t.kinds = {ColumnKind::numeric, ColumnKind::numeric, ColumnKind::numeric, ColumnKind::numeric,
             ColumnKind::categorical};
  t.label = "y";
  t.task = Task::classification;
  for (int r = 0; r < 400; ++r) {
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), c = rng.uniform(-1, 1);
    t.rows.push_back({a, b, c, rng.bernoulli(0.3) ? Cell{} : Cell{rng.uniform()},
                      std::string(a + 0.5 * b > 0 ? "pos" : "neg")});
  }
  const EncodedDataset ds = encode(t);
  SplitSpec split;
  split.policy = SplitPolicy::seeded_shuffle;
  split.validation_fraction = 0.2;
  const Split s = split_rows(400, split);
  const TrainingData data = make_training_data(ds, {"x0", "x1", "x2"}, s.train, s.validation);
  MlpSpec enc = small_encoder();
  enc.head = {HeadKind::classification, 2};
  PretrainConfig pc;
  pc.epochs = 50;
  pc.learning_rate = 0.1;
  const PretrainResult r = pretrain(data, enc, pc);
  REQUIRE(r.report.semi_validation.has_value());
  CHECK(*r.report.semi_validation < 0.2);
  CHECK(r.report.epochs.size() == 50);
}

TEST_CASE("negative rows and candidates") {
  Workspace w = synthetic_workspace(100, 9);
  PretrainConfig pc;
  pc.epochs = 1;
  const PretrainResult pre = pretrain(w.data, small_encoder(), pc);
  const auto& semi = w.data.train.semi;
  CHECK_THROWS_AS(negative_row(*w.ds, w.data.train, {ViewKind::semi, 100000}), NotFoundError);
  std::size_t incomplete = DataView::npos;
  for (std::size_t r : semi.rows)
    if (!w.data.train.full.contains(r)) incomplete = r;
  REQUIRE(incomplete != DataView::npos);
  CHECK_THROWS_AS(negative_row(*w.ds, w.data.train, {ViewKind::full, incomplete}), WorkflowError);
  CHECK(negative_row(*w.ds, w.data.train, {ViewKind::semi, incomplete}).size() == semi.width());

  const std::vector<NegativeRef> refs{{ViewKind::semi, semi.rows[0]}, {ViewKind::semi, semi.rows[1]}};
  const CandidateSet emb = negative_candidates(*w.ds, w.data.train, pre.pair, refs, Representation::embedding);
  CHECK(emb.x.cols() == 4);
  CHECK(emb.candidates.size() == 2);
  const CandidateSet raw = negative_candidates(*w.ds, w.data.train, pre.pair, refs, Representation::raw);
  CHECK(raw.x.cols() == semi.width());
  ModelPair fresh = pre.pair;
  fresh.pretrained = false;
  CHECK_THROWS_AS(negative_candidates(*w.ds, w.data.train, fresh, refs, Representation::embedding), StateError);
}

TEST_CASE("checkpoint round trip is bit-identical") {
  Workspace w = synthetic_workspace(100, 10);
  PretrainConfig pc;
  pc.epochs = 2;
  PretrainResult pre = pretrain(w.data, small_encoder(), pc);
  const SamplingState st = random_sampling(w.data, pre.pair, 0.2, 1);
  TrainConfig cfg;
  cfg.epochs = 2;
  const TrainRecorder rec = train(pre.pair, w.data, st, cfg);
  const Checkpoint cp{cfg, rec.epochs.back(), pre.pair, st};
  const std::string bytes = serialize_checkpoint(cp);
  CHECK(bytes.substr(0, 4) == "CIVC");
  const Checkpoint back = deserialize_checkpoint(bytes);
  CHECK(back.pair == cp.pair);
  CHECK(back.final_metrics == cp.final_metrics);
  CHECK(serialize_checkpoint(back) == bytes);
  CHECK(forward(back.pair.semi, w.data.train.semi.x).prediction == forward(cp.pair.semi, w.data.train.semi.x).prediction);
  CHECK(back.sampling.negatives.size() == st.negatives.size());
  CHECK(back.sampling.mapping.matches.size() == st.mapping.matches.size());

  const std::string path = "checkpoint_roundtrip.civc";
  write_checkpoint(path, cp);
  CHECK(serialize_checkpoint(read_checkpoint(path)) == bytes);
  std::remove(path.c_str());

  CHECK_THROWS_AS(deserialize_checkpoint("XXXX" + bytes.substr(4)), FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 8)), FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, 10)), FormatError);
  std::string wrong_version = bytes;
  wrong_version[4] = 9;
  CHECK_THROWS_AS(deserialize_checkpoint(wrong_version), FormatError);
  CHECK_THROWS_AS(read_checkpoint("/nonexistent/path.civc"), NotFoundError);
}

TEST_CASE("checkpoint log") {
  CheckpointLog log;
  Checkpoint cp;
  cp.pair = ModelPair::create(small_encoder(), 3, 2, 0);
  const auto a = log.save(cp, 100);
  const auto b = log.save(cp, 101);
  CHECK(a == 1);
  CHECK(b > a);
  CHECK(log.switch_to(a).pair == cp.pair);
  log.remove(a);
  CHECK_THROWS_AS(log.switch_to(a), NotFoundError);
  CHECK_THROWS_AS(log.remove(a), NotFoundError);
  CHECK(log.save(cp, 102) == 3);
  CHECK(log.size() == 2);
  CHECK(log.get(b).timestamp == 101);
}

TEST_CASE("json serialization") {
  TrainConfig c;
  c.temperature = 0.07;
  c.epochs = 3;
  const TrainConfig back = train_config_from_json(to_json(c));
  CHECK(back.temperature == 0.07);
  CHECK(back.epochs == 3);
  CHECK(train_config_from_json(Json{{"epochs", 9}}).temperature == TrainConfig{}.temperature);
  CHECK_THROWS_AS(train_config_from_json(Json{{"epoch", 9}}), ConfigError);
  CHECK_THROWS_AS(pretrain_config_from_json(Json{{"bogus", 1}}), ConfigError);

  EpochMetrics m;
  m.epoch = 4;
  m.train_loss = 0.5;
  m.mean_pos = 0.25;
  const Json j = to_json(m);
  CHECK(j["mean_neg"].is_null());
  CHECK(epoch_metrics_from_json(j) == m);

  MlpSpec spec;
  spec.hidden_dims = {7, 3};
  spec.embedding_dim = 3;
  spec.head = {HeadKind::classification, 4};
  CHECK(mlp_spec_from_json(to_json(spec)) == spec);
  Json partial = to_json(spec);
  partial.erase("embedding_dim");
  CHECK(mlp_spec_from_json(partial).embedding_dim == 3);

  NegativeCollection col;
  col.add({{ViewKind::full, 3}, NegativeStrategy::hard});
  col.add({{ViewKind::semi, 1}, NegativeStrategy::manual});
  const NegativeCollection col2 = negative_collection_from_json(to_json(col));
  REQUIRE(col2.size() == 2);
  CHECK(col2.entries()[0].ref == col.entries()[0].ref);
  CHECK(col2.entries()[0].provenance == NegativeStrategy::hard);

  Rng rng(2);
  Workspace w = toy_workspace(rng);
  const ModelPair pair = ModelPair::create(small_encoder(), w.data.train.full.width(), w.data.train.semi.width(), 1);
  const PositiveMapping pm = build_positive_mapping(w.data.train, pair, Representation::raw);
  const PositiveMapping pm2 = positive_mapping_from_json(to_json(pm));
  REQUIRE(pm2.matches.size() == pm.matches.size());
  for (std::size_t i = 0; i < pm.matches.size(); ++i) {
    CHECK(pm2.matches[i].full_row == pm.matches[i].full_row);
    CHECK(pm2.matches[i].mu == pm.matches[i].mu);
    CHECK(pm2.matches[i].score == pm.matches[i].score);
  }
}
