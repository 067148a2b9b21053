// civis: command-line driver for the contrastive missing-data workflow.
#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "civ/baselines/bench.hpp"
#include "civ/clengine/checkpoint.hpp"
#include "civ/dataio/split.hpp"
#include "civ/dataio/stats.hpp"
#include "civ/error.hpp"
#include "civ/explain/attribution.hpp"
#include "civ/service/payloads.hpp"
#include "civ/service/server.hpp"

using namespace civ;

namespace {

struct DataArgs {
  std::string csv;
  std::string label;
  std::string task = "regression";
  std::vector<std::string> categorical;
  std::string synthetic;  // "default" or a JSON file
  std::vector<std::string> select;
};

struct Pipeline {
  std::string config_path;
  std::size_t pretrain_epochs = 20;
  std::optional<std::size_t> epochs;
  std::optional<double> temperature, weight, momentum, lr;
  std::optional<std::size_t> batch;
  std::string strategy = "hard";
  double rate = 0.6;
  std::string representation;
  std::string out;
};

void add_data_options(CLI::App* app, DataArgs& d) {
  app->add_option("--csv", d.csv, "CSV dataset path");
  app->add_option("--label", d.label, "Label column of the CSV");
  app->add_option("--task", d.task, "regression or classification")->check(CLI::IsMember({"regression", "classification"}));
  app->add_option("--categorical", d.categorical, "Columns forced categorical")->delimiter(',');
  app->add_option("--synthetic", d.synthetic, "'default' or a synthetic spec JSON file");
  app->add_option("--select", d.select, "Selected feature columns (default: features without missing values)")
      ->delimiter(',');
}

void add_pipeline_options(CLI::App* app, Pipeline& p) {
  app->add_option("--config", p.config_path, "JSON with encoder/pretrain/train/sampling/split sections");
  app->add_option("--pretrain-epochs", p.pretrain_epochs, "Pretraining epochs");
  app->add_option("--epochs", p.epochs, "Contrastive training epochs");
  app->add_option("--temperature", p.temperature, "InfoNCE temperature T");
  app->add_option("--weight", p.weight, "Contrastive weight M");
  app->add_option("--momentum", p.momentum, "Momentum m");
  app->add_option("--lr", p.lr, "Learning rate");
  app->add_option("--batch", p.batch, "Batch size");
  app->add_option("--strategy", p.strategy, "random, hard or manual")->check(CLI::IsMember({"random", "hard"}));
  app->add_option("--rate", p.rate, "Negative sampling rate");
  app->add_option("--representation", p.representation, "embedding or raw (default by validation error)");
}

Json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read " + path);
  try {
    return Json::parse(f);
  } catch (const Json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("CIV_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (*end != '\0') throw ConfigError("CIV_SEED must be an unsigned integer");
  return s;
}

RawTable load_table(const DataArgs& d, std::uint64_t seed) {
  if (d.csv.empty() == d.synthetic.empty()) throw ConfigError("pass exactly one of --csv or --synthetic");
  if (!d.synthetic.empty()) {
    SynthSpec spec = d.synthetic == "default" ? SynthSpec{} : synth_spec_from_json(read_json(d.synthetic));
    if (d.synthetic == "default") spec.seed = seed;
    return synth_generate(spec);
  }
  if (d.label.empty()) throw ConfigError("--csv needs --label");
  SchemaHints hints;
  hints.label = d.label;
  hints.task = task_from_string(d.task);
  hints.categorical = d.categorical;
  return load_csv(d.csv, hints);
}

std::vector<std::string> selection(const DataArgs& d, const RawTable& t) {
  if (!d.select.empty()) return d.select;
  std::vector<std::string> out;
  for (const FeatureStat& f : feature_stats(t).features) {
    if (f.missing_count == 0) out.push_back(f.name);
  }
  if (out.empty()) throw ConfigError("every feature has missing values; pass --select");
  return out;
}

struct Setup {
  MlpSpec encoder;
  PretrainConfig pretrain;
  TrainConfig train;
  SamplingPlan sampling;
  SplitSpec split;
};

Setup setup(const Pipeline& p, std::optional<std::uint64_t> seed) {
  Setup s;
  s.pretrain.epochs = p.pretrain_epochs;
  if (!p.config_path.empty()) {
    const Json j = read_json(p.config_path);
    if (j.contains("encoder")) s.encoder = mlp_spec_from_json(j.at("encoder"));
    if (j.contains("pretrain")) s.pretrain = pretrain_config_from_json(j.at("pretrain"), s.pretrain);
    if (j.contains("train")) s.train = train_config_from_json(j.at("train"));
    if (j.contains("split")) {
      const Json& sp = j.at("split");
      s.split.validation_fraction = sp.value("validation_fraction", s.split.validation_fraction);
      s.split.test_fraction = sp.value("test_fraction", s.split.test_fraction);
      if (sp.contains("policy")) s.split.policy = split_policy_from_string(sp.at("policy").get<std::string>());
      s.split.seed = sp.value("seed", s.split.seed);
    }
  }
  if (p.epochs) s.train.epochs = *p.epochs;
  if (p.temperature) s.train.temperature = *p.temperature;
  if (p.weight) s.train.contrastive_weight = *p.weight;
  if (p.momentum) s.train.momentum = *p.momentum;
  if (p.lr) s.train.learning_rate = s.pretrain.learning_rate = *p.lr;
  if (p.batch) s.train.batch_size = s.pretrain.batch_size = *p.batch;
  s.sampling.negatives = {negative_strategy_from_string(p.strategy), p.rate};
  if (!p.representation.empty()) s.sampling.representation = representation_from_string(p.representation);
  if (seed) s.pretrain.seed = s.train.seed = s.sampling.seed = s.split.seed = *seed;
  s.sampling.seed = s.train.seed;
  s.train.validate();
  s.pretrain.validate();
  return s;
}

struct Prepared {
  RawTable table;
  EncodedDataset ds;
  Split split;
  std::vector<std::string> selected;
  TrainingData data;
  MlpSpec encoder;
};

std::unique_ptr<Prepared> prepare(const DataArgs& d, const Setup& s) {
  auto p = std::make_unique<Prepared>();
  p->table = load_table(d, s.train.seed);
  p->ds = encode(p->table);
  p->split = split_rows(p->table.rows.size(), s.split);
  p->selected = selection(d, p->table);
  p->data = make_training_data(p->ds, p->selected, p->split.train, p->split.validation);
  p->encoder = s.encoder;
  p->encoder.head = p->ds.encoding.task == Task::regression
                        ? HeadSpec{HeadKind::regression, 1}
                        : HeadSpec{HeadKind::classification, p->ds.encoding.class_count()};
  return p;
}

int cmd_prep(const DataArgs& d) {
  const RawTable t = load_table(d, env_seed().value_or(0));
  const FeatureStats stats = feature_stats(t);
  const EncodedDataset ds = encode(t);
  Json out{{"stats", to_json(stats)}, {"encoded_width", ds.encoding.width}, {"dims", ds.encoding.dim_names()}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_pretrain(const DataArgs& d, const Pipeline& pl) {
  const Setup s = setup(pl, env_seed());
  auto p = prepare(d, s);
  const PretrainResult r = pretrain(p->data, p->encoder, s.pretrain);
  std::cout << Json{{"selected", p->selected}, {"report", to_json(r.report)}}.dump() << "\n";
  if (!pl.out.empty()) write_checkpoint(pl.out, Checkpoint{s.train, std::nullopt, r.pair, {}});
  return 0;
}

int cmd_train(const DataArgs& d, const Pipeline& pl) {
  const Setup s = setup(pl, env_seed());
  auto p = prepare(d, s);
  PretrainResult r = pretrain(p->data, p->encoder, s.pretrain);
  const SamplingState sampling = plan_sampling(p->data, r.pair, r.report.semi_validation, s.sampling);
  TrainHooks hooks;
  hooks.on_epoch = [](const EpochMetrics& m) { std::cout << to_json(m).dump() << "\n" << std::flush; };
  const TrainRecorder rec = train(r.pair, p->data, sampling, s.train, hooks);
  if (rec.collapse.collapsed) {
    std::cerr << "collapse detected at epoch " << rec.collapse.first_offending_epoch << "\n";
  }
  if (!pl.out.empty()) {
    std::optional<EpochMetrics> last;
    if (!rec.epochs.empty()) last = rec.epochs.back();
    write_checkpoint(pl.out, Checkpoint{s.train, last, r.pair, sampling});
  }
  return 0;
}

int cmd_infer(const DataArgs& d, const Pipeline& pl, const std::string& checkpoint, const std::string& split_name) {
  const Setup s = setup(pl, env_seed());
  auto p = prepare(d, s);
  const Checkpoint cp = read_checkpoint(checkpoint);
  if (cp.pair.semi.spec.input_dim != p->data.train.semi.width()) {
    throw ShapeError("checkpoint semi model expects " + std::to_string(cp.pair.semi.spec.input_dim) +
                     " inputs, the selection encodes to " + std::to_string(p->data.train.semi.width()));
  }
  std::vector<std::size_t> rows = split_name == "test" ? p->split.test : split_name == "validation" ? p->split.validation : std::vector<std::size_t>{};
  if (split_name == "all") {
    for (std::size_t r = 0; r < p->table.rows.size(); ++r) rows.push_back(r);
  }
  const FilterResult f = inference_filter(p->table, p->selected, rows);
  const std::vector<std::size_t> cols = column_positions(p->ds.encoding, p->selected);
  const DataView view = make_view(p->ds, ViewKind::semi, cols, f.kept);
  if (!view.empty()) {
    const Matrix pred = forward(cp.pair.semi, view.x).prediction;
    const auto attr = attribute_rows(cp.pair.semi, view.x, p->ds.encoding, cols);
    for (std::size_t i = 0; i < view.size(); ++i) {
      Json line{{"row", view.rows[i]}, {"attribution", to_json(attr[i])}};
      if (p->ds.encoding.task == Task::regression) {
        line["prediction"] = p->ds.encoding.unscale_label(pred(i, 0));
      } else {
        const auto r = pred.row(i);
        line["prediction"] = p->ds.encoding.classes.at(static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin()));
      }
      std::cout << line.dump() << "\n";
    }
  }
  std::cout << Json{{"discarded", f.discarded}}.dump() << "\n";
  return 0;
}

int cmd_bench(const DataArgs& d, const Pipeline& pl, std::size_t seeds, const std::string& json_out) {
  const auto seed = env_seed();
  const Setup s = setup(pl, std::nullopt);
  BenchConfig cfg;
  if (!d.synthetic.empty() && d.csv.empty()) {
    cfg.synthetic = d.synthetic == "default" ? SynthSpec{} : synth_spec_from_json(read_json(d.synthetic));
  } else {
    cfg.table = load_table(d, 0);
    cfg.split.policy = s.split.policy;
  }
  cfg.selected = d.select;
  cfg.encoder = s.encoder;
  cfg.pretrain = s.pretrain;
  cfg.train = s.train;
  cfg.sampling = s.sampling;
  cfg.seeds.clear();
  const std::uint64_t base = seed.value_or(0);
  for (std::size_t i = 0; i < seeds; ++i) cfg.seeds.push_back(base + i);
  const BenchReport report = run_bench(cfg);
  std::cout << bench_text(report);
  if (!json_out.empty()) {
    std::ofstream f(json_out);
    f << to_json(report).dump(2) << "\n";
  }
  return 0;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int cmd_serve(const std::string& host, int port, const std::string& config) {
  ServiceOptions so;
  ServerOptions ho;
  if (!config.empty()) {
    const Json j = read_json(config);
    if (j.contains("log_dir")) so.log_dir = j.at("log_dir").get<std::string>();
    if (j.contains("seed")) so.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("heartbeat_ms")) ho.heartbeat = std::chrono::milliseconds(j.at("heartbeat_ms").get<long>());
  }
  if (const auto s = env_seed()) so.seed = s;
  Service service(so);
  HttpServer server(service, ho);
  const int bound = server.bind(host, port);
  std::cout << "listening on " << host << ":" << bound << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen();
  g_server = nullptr;
  service.stop_all();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive training on data with missing features"};
  app.require_subcommand(1);

  DataArgs data;
  Pipeline pipe;
  std::string checkpoint, split_name = "test", json_out, host = "127.0.0.1", serve_config;
  std::size_t seeds = 3;
  int port = 8080;

  auto* prep = app.add_subcommand("prep", "Load a dataset and print feature statistics");
  add_data_options(prep, data);

  auto* pre = app.add_subcommand("pretrain", "Pretrain the full and semi models");
  add_data_options(pre, data);
  add_pipeline_options(pre, pipe);
  pre->add_option("--out", pipe.out, "Write the pair to a checkpoint file");

  auto* tr = app.add_subcommand("train", "Pretrain, sample, and run contrastive training");
  add_data_options(tr, data);
  add_pipeline_options(tr, pipe);
  tr->add_option("--out", pipe.out, "Write the trained pair to a checkpoint file");

  auto* inf = app.add_subcommand("infer", "Predict with a checkpoint's semi model");
  add_data_options(inf, data);
  add_pipeline_options(inf, pipe);
  inf->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  inf->add_option("--split", split_name, "test, validation or all")->check(CLI::IsMember({"test", "validation", "all"}));

  auto* bench = app.add_subcommand("bench", "Compare against imputation baselines");
  add_data_options(bench, data);
  add_pipeline_options(bench, pipe);
  bench->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
  bench->add_option("--json", json_out, "Also write the report as JSON");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--config", serve_config, "Service config JSON (log_dir, seed, heartbeat_ms)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*prep) return cmd_prep(data);
    if (*pre) return cmd_pretrain(data, pipe);
    if (*tr) return cmd_train(data, pipe);
    if (*inf) return cmd_infer(data, pipe, checkpoint, split_name);
    if (*bench) return cmd_bench(data, pipe, seeds, json_out);
    if (*serve) return cmd_serve(host, port, serve_config);
  } catch (const Error& e) {
    std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
