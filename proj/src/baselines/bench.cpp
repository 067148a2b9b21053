#include "civ/baselines/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "civ/baselines/auc.hpp"
#include "civ/baselines/impute.hpp"
#include "civ/dataio/stats.hpp"
#include "civ/error.hpp"

namespace civ {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

RawTable subset(const RawTable& t, const std::vector<std::size_t>& rows) {
  RawTable out = t;
  out.rows.clear();
  for (std::size_t r : rows) out.rows.push_back(t.rows[r]);
  return out;
}

std::vector<std::string> complete_features(const RawTable& t) {
  std::vector<std::string> out;
  for (const FeatureStat& f : feature_stats(t).features) {
    if (f.missing_count == 0) out.push_back(f.name);
  }
  return out;
}

void score(MethodResult& out, const MlpParams& model, const Matrix& x, std::span<const double> labels) {
  const Matrix pred = forward(model, x).prediction;
  if (model.spec.head.kind == HeadKind::regression) {
    out.mse = evaluate_predictions(model, pred, labels);
    return;
  }
  out.acc = 1.0 - *evaluate_predictions(model, pred, labels);
  if (pred.cols() != 2) return;
  std::vector<double> p1;
  std::vector<int> y;
  for (std::size_t i = 0; i < pred.rows(); ++i) {
    p1.push_back(1.0 / (1.0 + std::exp(pred(i, 0) - pred(i, 1))));
    y.push_back(static_cast<int>(labels[i]));
  }
  try {
    out.auc = auc_rank(p1, y);
  } catch (const ConfigError&) {
    // single-class test split: no AUC
  }
}

SeedResult run_seed(const BenchConfig& cfg, std::uint64_t seed, std::vector<std::string>& selected_out) {
  RawTable table;
  if (cfg.synthetic) {
    SynthSpec s = *cfg.synthetic;
    s.seed = seed;
    table = synth_generate(s);
  } else {
    table = *cfg.table;
  }
  const std::vector<std::string> selected = cfg.selected.empty() ? complete_features(table) : cfg.selected;
  if (selected.empty()) throw ConfigError("bench: no feature without missing values; pass a selection");
  selected_out = selected;

  SplitSpec split = cfg.split;
  split.seed = seed;
  const Split parts = split_rows(table.rows.size(), split);
  const Encoding enc = fit_encoding(subset(table, parts.train));
  const EncodedDataset ds = apply_encoding(enc, table);

  MlpSpec encoder = cfg.encoder;
  encoder.head = enc.task == Task::regression ? HeadSpec{HeadKind::regression, 1}
                                              : HeadSpec{HeadKind::classification, enc.class_count()};
  const TrainingData data = make_training_data(ds, selected, parts.train, parts.validation);
  const ViewPair test = derive_views(ds, selected, parts.test);

  SeedResult result;
  result.seed = seed;
  result.test_rows = test.semi.rows;
  for (const std::string& m : kBenchMethods) result.methods.push_back({m, {}, {}, {}, 0.0, {}});
  MethodResult& knn = result.methods[0];
  MethodResult& mf = result.methods[1];
  MethodResult& cl = result.methods[2];
  MethodResult& pure = result.methods[3];

  PretrainConfig pc = cfg.pretrain;
  pc.seed = seed;
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  SamplingPlan plan = cfg.sampling;
  plan.seed = seed;

  std::optional<ModelPair> trained_full;
  PretrainResult pre;
  SamplingState sampling;
  const auto t_pre = Clock::now();
  double shared_seconds = 0.0;
  try {
    pre = pretrain(data, encoder, pc);
    sampling = plan_sampling(data, pre.pair, pre.report.semi_validation, plan);
    shared_seconds = seconds_since(t_pre);
  } catch (const std::exception& e) {
    for (MethodResult& m : result.methods) m.failure = std::string("pretrain: ") + e.what();
    return result;
  }

  try {
    const auto t0 = Clock::now();
    ModelPair pair = pre.pair;
    train(pair, data, sampling, tc);
    score(cl, pair.semi, test.semi.x, test.semi.labels);
    cl.runtime_seconds = shared_seconds + seconds_since(t0);
    trained_full = pair;
  } catch (const std::exception& e) {
    cl.failure = e.what();
  }
  try {
    const auto t0 = Clock::now();
    ModelPair pair = pre.pair;
    TrainConfig plain = tc;
    plain.contrastive_weight = 0.0;
    train(pair, data, sampling, plain);
    score(pure, pair.semi, test.semi.x, test.semi.labels);
    pure.runtime_seconds = shared_seconds + seconds_since(t0);
    if (!trained_full) trained_full = pair;
  } catch (const std::exception& e) {
    pure.failure = e.what();
  }

  // The imputation baselines are scored on the rows the semi models were scored on.
  const std::vector<std::size_t>& rows = result.test_rows;
  std::vector<double> labels;
  for (std::size_t r : rows) labels.push_back(ds.labels[r]);
  const std::pair<MethodResult*, ImputedTable (*)(const RawTable&, std::size_t)> imputers[] = {
      {&knn, [](const RawTable& t, std::size_t k) { return impute_knn(t, k); }},
      {&mf, [](const RawTable& t, std::size_t) { return impute_most_frequent(t); }},
  };
  for (const auto& [out, impute] : imputers) {
    const auto t0 = Clock::now();
    try {
      if (!trained_full) throw TrainingError("no trained full model");
      const EncodedDataset filled = apply_encoding(enc, impute(table, cfg.knn_k).table);
      const std::vector<std::size_t> all = [&] {
        std::vector<std::size_t> v(enc.columns.size());
        for (std::size_t c = 0; c < v.size(); ++c) v[c] = c;
        return v;
      }();
      const DataView view = make_view(filled, ViewKind::full, all, rows);
      if (view.rows != rows) throw ContractError("imputed test rows differ from the semi test rows");
      score(*out, trained_full->full, view.x, labels);
      out->runtime_seconds = seconds_since(t0);
    } catch (const std::exception& e) {
      out->failure = e.what();
    }
  }
  return result;
}

std::optional<double> primary(const MethodResult& m) { return m.mse ? m.mse : m.acc; }

}  // namespace

BenchReport run_bench(const BenchConfig& config) {
  if (config.synthetic.has_value() == config.table.has_value()) {
    throw ConfigError("bench: provide exactly one of a synthetic spec or a table");
  }
  if (config.seeds.empty()) throw ConfigError("bench: need at least one seed");
  BenchReport report;
  report.task = config.synthetic ? config.synthetic->task : config.table->task;
  report.metric = report.task == Task::regression ? "mse" : "acc";
  for (std::uint64_t seed : config.seeds) {
    report.seeds.push_back(run_seed(config, seed, report.selected));
  }
  for (std::size_t i = 0; i < kBenchMethods.size(); ++i) {
    MethodSummary s;
    s.method = kBenchMethods[i];
    std::vector<double> v, a;
    for (const SeedResult& r : report.seeds) {
      if (const auto p = primary(r.methods[i])) v.push_back(*p);
      if (r.methods[i].auc) a.push_back(*r.methods[i].auc);
    }
    s.runs = v.size();
    if (!v.empty()) {
      double mean = 0.0, var = 0.0;
      for (double x : v) mean += x / static_cast<double>(v.size());
      for (double x : v) var += (x - mean) * (x - mean) / static_cast<double>(v.size());
      s.mean = mean;
      s.stdev = std::sqrt(var);
    }
    if (!a.empty()) {
      double mean = 0.0;
      for (double x : a) mean += x / static_cast<double>(a.size());
      s.auc_mean = mean;
    }
    report.summary.push_back(s);
  }
  return report;
}

Json to_json(const BenchReport& report) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json seeds = Json::array();
  for (const SeedResult& r : report.seeds) {
    Json methods = Json::array();
    for (const MethodResult& m : r.methods) {
      methods.push_back({{"method", m.method},
                         {"mse", opt(m.mse)},
                         {"acc", opt(m.acc)},
                         {"auc", opt(m.auc)},
                         {"runtime_seconds", m.runtime_seconds},
                         {"failure", m.failure.empty() ? Json(nullptr) : Json(m.failure)}});
    }
    seeds.push_back({{"seed", r.seed}, {"test_rows", r.test_rows.size()}, {"methods", methods}});
  }
  Json summary = Json::array();
  for (const MethodSummary& s : report.summary) {
    summary.push_back({{"method", s.method},
                       {"mean", opt(s.mean)},
                       {"stdev", opt(s.stdev)},
                       {"auc_mean", opt(s.auc_mean)},
                       {"runs", s.runs}});
  }
  return Json{{"task", to_string(report.task)},
              {"metric", report.metric},
              {"selected", report.selected},
              {"seeds", seeds},
              {"summary", summary}};
}

std::string bench_text(const BenchReport& report) {
  std::ostringstream out;
  char buf[160];
  const bool cls = report.task == Task::classification;
  std::snprintf(buf, sizeof buf, "%-8s %-15s %12s %10s %10s  %s\n", "seed", "method", report.metric.c_str(),
                cls ? "auc" : "", "seconds", "note");
  out << buf;
  for (const SeedResult& r : report.seeds) {
    for (const MethodResult& m : r.methods) {
      const auto p = primary(m);
      std::snprintf(buf, sizeof buf, "%-8llu %-15s %12s %10s %10.2f  %s\n", static_cast<unsigned long long>(r.seed),
                    m.method.c_str(), p ? format_number(*p).substr(0, 12).c_str() : "-",
                    m.auc ? format_number(*m.auc).substr(0, 10).c_str() : "", m.runtime_seconds, m.failure.c_str());
      out << buf;
    }
  }
  out << "\n";
  std::snprintf(buf, sizeof buf, "%-15s %12s %12s %10s %6s\n", "method", "mean", "stdev", cls ? "auc" : "", "runs");
  out << buf;
  for (const MethodSummary& s : report.summary) {
    std::snprintf(buf, sizeof buf, "%-15s %12.6f %12.6f %10s %6zu\n", s.method.c_str(), s.mean.value_or(NAN),
                  s.stdev.value_or(NAN), s.auc_mean ? format_number(*s.auc_mean).substr(0, 10).c_str() : "", s.runs);
    out << buf;
  }
  return out.str();
}

}  // namespace civ
