#include "civ/service/service.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <thread>

#include "civ/clengine/checkpoint.hpp"
#include "civ/clengine/trainer.hpp"
#include "civ/dataio/split.hpp"
#include "civ/dataio/stats.hpp"
#include "civ/explain/attribution.hpp"
#include "civ/explain/geometry.hpp"
#include "civ/sampling/bins.hpp"
#include "civ/service/payloads.hpp"

namespace civ {

const char* to_string(Stage s) {
  switch (s) {
    case Stage::specification: return "Specification";
    case Stage::sampling: return "Sampling";
    case Stage::train: return "Train";
    case Stage::infer: return "Infer";
  }
  return "Specification";
}

void RunStream::push(std::string frame) {
  {
    std::lock_guard lock(mu_);
    frames_.push_back(std::move(frame));
  }
  cv_.notify_all();
}

void RunStream::finish(std::string frame) {
  {
    std::lock_guard lock(mu_);
    frames_.push_back(std::move(frame));
    done_ = true;
  }
  cv_.notify_all();
}

std::optional<std::string> RunStream::next(std::size_t index, std::chrono::milliseconds timeout, bool& done) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return index < frames_.size() || done_; });
  done = done_ && index >= frames_.size();
  if (index < frames_.size()) return frames_[index];
  return std::nullopt;
}

std::vector<std::string> RunStream::frames() const {
  std::lock_guard lock(mu_);
  return frames_;
}

bool RunStream::done() const {
  std::lock_guard lock(mu_);
  return done_;
}

std::string sse_frame(const std::string& event, const Json& data) {
  return "event: " + event + "\ndata: " + data.dump() + "\n\n";
}

struct Run {
  std::uint64_t id = 0;
  TrainConfig config;
  std::shared_ptr<RunStream> stream = std::make_shared<RunStream>();
  TrainRecorder recorder;
  bool finished = false;
  std::string error;
};

struct Session {
  std::string id;
  std::mutex gate;
  Stage stage = Stage::specification;

  RawTable table;
  EncodedDataset ds;
  Split split;
  MlpSpec encoder;
  PretrainConfig pretrain_config;
  FeatureStats stats;

  std::vector<std::string> selected;
  std::vector<std::size_t> selected_positions;
  std::optional<TrainingData> data;
  ModelPair pair;
  PretrainReport pretrain_report;
  SamplingState sampling;
  bool positive_set = false;
  double momentum = TrainConfig{}.momentum;

  std::vector<std::shared_ptr<Run>> runs;
  std::uint64_t next_run = 1;
  std::optional<TrainConfig> last_config;
  std::optional<EpochMetrics> last_metrics;
  CheckpointLog log;

  std::thread worker;
  std::atomic<bool> running{false};
  std::atomic<bool> stop{false};

  ~Session() {
    stop = true;
    if (worker.joinable()) worker.join();
  }
};

namespace {

[[noreturn]] void fail(ApiCode code, const std::string& message) { throw ApiError(code, message); }

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const ApiError&) {
    throw;
  } catch (const std::exception& e) {
    throw to_api_error(e);
  }
}

void require_stage(const Session& s, std::initializer_list<Stage> allowed, const char* action) {
  if (std::find(allowed.begin(), allowed.end(), s.stage) != allowed.end()) return;
  fail(ApiCode::invalid_stage, std::string(action) + " is not allowed in stage " + to_string(s.stage));
}

void require_idle(const Session& s) {
  if (s.running) fail(ApiCode::training_busy, "a training run is in progress");
}

std::size_t parse_size(const Query& q, const std::string& key, std::size_t fallback) {
  const auto it = q.find(key);
  if (it == q.end() || it->second.empty()) return fallback;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    fail(ApiCode::bad_request, "query parameter '" + key + "' must be a non-negative integer");
  }
}

std::vector<std::size_t> parse_list(const Query& q, const std::string& key) {
  std::vector<std::size_t> out;
  const auto it = q.find(key);
  if (it == q.end() || it->second.empty()) return out;
  std::size_t start = 0;
  const std::string& s = it->second;
  while (start <= s.size()) {
    const std::size_t comma = std::min(s.find(',', start), s.size());
    Query one{{key, s.substr(start, comma - start)}};
    out.push_back(parse_size(one, key, 0));
    start = comma + 1;
  }
  return out;
}

Json widths(const Session& s) {
  if (!s.data) return nullptr;
  return Json{{"full", s.data->train.full.width()}, {"semi", s.data->train.semi.width()}};
}

Json row_counts(const Session& s) {
  if (!s.data) return nullptr;
  return Json{{"full", s.data->train.full.size()},
              {"semi", s.data->train.semi.size()},
              {"validation_full", s.data->validation.full.size()},
              {"validation_semi", s.data->validation.semi.size()}};
}

Json collection_json(const NegativeCollection& c) {
  return Json{{"size", c.size()},
              {"semi", c.count(ViewKind::semi)},
              {"full", c.count(ViewKind::full)},
              {"entries", to_json(c)}};
}

Json run_json(const Run& r) {
  Json j{{"run_id", r.id}, {"config", to_json(r.config)}, {"finished", r.finished}};
  j["epochs"] = r.recorder.epochs.size();
  j["stopped"] = r.recorder.stopped;
  j["error"] = r.error.empty() ? Json(nullptr) : Json(r.error);
  return j;
}

Json done_json(const Run& r) {
  Json j{{"run_id", r.id},
         {"epochs", r.recorder.epochs.size()},
         {"last_epoch", r.recorder.epochs.empty() ? Json(nullptr) : Json(r.recorder.epochs.back().epoch)},
         {"stopped", r.recorder.stopped},
         {"collapse",
          {{"collapsed", r.recorder.collapse.collapsed},
           {"first_offending_epoch",
            r.recorder.collapse.collapsed ? Json(r.recorder.collapse.first_offending_epoch) : Json(nullptr)}}}};
  j["error"] = r.error.empty() ? Json(nullptr) : Json(r.error);
  return j;
}

RawTable load_dataset(const Json& d) {
  if (!d.is_object() || !d.contains("path")) fail(ApiCode::bad_request, "dataset needs a 'path'");
  SchemaHints hints;
  hints.label = d.value("label", "");
  if (hints.label.empty()) fail(ApiCode::bad_request, "dataset needs a 'label' column name");
  hints.task = task_from_string(d.value("task", "regression"));
  hints.categorical = d.value("categorical", std::vector<std::string>{});
  hints.drop = d.value("drop", std::vector<std::string>{});
  const std::string path = d.at("path").get<std::string>();
  if (!std::filesystem::is_regular_file(path)) fail(ApiCode::bad_request, "cannot read dataset file " + path);
  return load_csv(path, hints);
}

SplitSpec split_from_json(const Json& j) {
  SplitSpec s;
  if (j.is_null()) return s;
  s.validation_fraction = j.value("validation_fraction", s.validation_fraction);
  s.test_fraction = j.value("test_fraction", s.test_fraction);
  if (j.contains("policy")) s.policy = split_policy_from_string(j.at("policy").get<std::string>());
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

}  // namespace

Service::Service(ServiceOptions options) : options_(std::move(options)) {}

Service::~Service() { stop_all(); }

void Service::stop_all() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mu_);
    for (auto& [id, s] : sessions_) all.push_back(s);
  }
  for (auto& s : all) {
    s->stop = true;
    if (s->worker.joinable()) s->worker.join();
  }
}

std::shared_ptr<Session> Service::find(const std::string& id) {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ApiCode::not_found, "no session '" + id + "'");
  return it->second;
}

Json Service::create_session(const Json& body) {
  return guarded([&] {
    if (!body.is_object()) fail(ApiCode::bad_request, "request body must be a JSON object");
    auto s = std::make_shared<Session>();
    if (body.contains("synthetic") == body.contains("dataset")) {
      fail(ApiCode::bad_request, "provide exactly one of 'dataset' or 'synthetic'");
    }
    if (body.contains("synthetic")) {
      s->table = synth_generate(synth_spec_from_json(body.at("synthetic")));
    } else {
      s->table = load_dataset(body.at("dataset"));
    }
    s->encoder = body.contains("encoder") ? mlp_spec_from_json(body.at("encoder")) : MlpSpec{};
    s->pretrain_config = body.contains("pretrain") ? pretrain_config_from_json(body.at("pretrain")) : PretrainConfig{};
    SplitSpec split = split_from_json(body.value("split", Json()));
    if (options_.seed) {
      s->pretrain_config.seed = *options_.seed;
      split.seed = *options_.seed;
    }
    s->stats = civ::feature_stats(s->table);
    s->ds = encode(s->table);
    s->split = split_rows(s->table.rows.size(), split);
    s->encoder.head = s->ds.encoding.task == Task::regression
                          ? HeadSpec{HeadKind::regression, 1}
                          : HeadSpec{HeadKind::classification, s->ds.encoding.class_count()};
    s->encoder.validate();
    {
      std::lock_guard lock(mu_);
      s->id = "s" + std::to_string(next_session_++);
      sessions_[s->id] = s;
    }
    return Json{{"session_id", s->id},
                {"stage", to_string(s->stage)},
                {"task", to_string(s->table.task)},
                {"label", s->table.label},
                {"stats", to_json(s->stats)},
                {"split",
                 {{"train", s->split.train.size()},
                  {"validation", s->split.validation.size()},
                  {"test", s->split.test.size()}}}};
  });
}

Json Service::session_info(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  Json runs = Json::array();
  for (const auto& r : s->runs) runs.push_back(run_json(*r));
  return Json{{"session_id", s->id},
              {"stage", to_string(s->stage)},
              {"task", to_string(s->table.task)},
              {"selected", s->selected},
              {"widths", widths(*s)},
              {"rows", row_counts(*s)},
              {"running", s->running.load()},
              {"positive_set", s->positive_set},
              {"negatives", collection_json(s->sampling.negatives).at("size")},
              {"runs", runs},
              {"logs", s->log.size()}};
}

Json Service::feature_stats(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  return to_json(s->stats);
}

Json Service::select_features(const std::string& id, const Json& body) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  return guarded([&] {
    require_idle(*s);
    require_stage(*s, {Stage::specification}, "feature selection");
    if (!body.is_object() || !body.contains("selected") || !body.at("selected").is_array()) {
      fail(ApiCode::bad_request, "body needs a 'selected' array of column names");
    }
    const auto selected = body.at("selected").get<std::vector<std::string>>();
    if (selected.empty()) fail(ApiCode::bad_request, "empty feature selection");
    for (const std::string& name : selected) {
      if (name == s->table.label) fail(ApiCode::bad_request, "the label column cannot be selected");
      const FeatureStat& f = s->stats.at(name);
      if (f.missing_count == s->stats.rows) fail(ApiCode::bad_request, "column '" + name + "' is entirely missing");
    }
    PretrainConfig pc = body.contains("pretrain") ? pretrain_config_from_json(body.at("pretrain"), s->pretrain_config)
                                                  : s->pretrain_config;
    if (options_.seed) pc.seed = *options_.seed;
    TrainingData data = make_training_data(s->ds, selected, s->split.train, s->split.validation);
    if (data.train.semi.empty()) fail(ApiCode::bad_request, "no training rows are complete on the selection");
    PretrainResult pre = pretrain(data, s->encoder, pc);

    s->selected = selected;
    s->selected_positions = column_positions(s->ds.encoding, selected);
    s->data = std::move(data);
    s->data->dataset = &s->ds;
    s->pair = std::move(pre.pair);
    s->pretrain_report = pre.report;
    s->pretrain_config = pc;
    s->sampling = {};
    s->positive_set = false;
    s->stage = Stage::sampling;
    return Json{{"stage", to_string(s->stage)},
                {"selected", s->selected},
                {"widths", widths(*s)},
                {"rows", row_counts(*s)},
                {"baseline", to_json(s->pretrain_report)},
                {"default_representation", to_string(default_representation(s->pretrain_report.semi_validation))}};
  });
}

Json Service::embeddings(const std::string& id, const Query& query) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  return guarded([&] {
    require_stage(*s, {Stage::sampling, Stage::train, Stage::infer}, "embeddings");
    const ViewPair& v = s->data->train;
    const std::size_t anchor_row = parse_size(query, "anchor", v.semi.rows.front());
    const std::size_t anchor = v.semi.position(anchor_row);
    if (anchor == DataView::npos) fail(ApiCode::not_found, "anchor row " + std::to_string(anchor_row) + " is not in the semi view");

    const Matrix es = forward(s->pair.semi, v.semi.x).embedding;
    const Matrix ef = forward(s->pair.full, v.full.x).embedding;
    Matrix all(0, es.cols());
    std::vector<std::size_t> rows;
    std::vector<ViewKind> views;
    for (std::size_t i = 0; i < es.rows(); ++i) {
      all.append_row(es.row(i));
      rows.push_back(v.semi.rows[i]);
      views.push_back(ViewKind::semi);
    }
    for (std::size_t i = 0; i < ef.rows(); ++i) {
      all.append_row(ef.row(i));
      rows.push_back(v.full.rows[i]);
      views.push_back(ViewKind::full);
    }
    std::vector<std::size_t> subset;
    for (std::size_t r : parse_list(query, "subset")) {
      const std::size_t p = v.semi.position(r);
      if (p == DataView::npos) fail(ApiCode::not_found, "subset row " + std::to_string(r) + " is not in the semi view");
      subset.push_back(p);
    }
    const CircleLayout layout = circle_layout(all, rows, views, anchor, subset);

    const auto m = query.find("method");
    const ProjectionMethod method = m == query.end() ? ProjectionMethod::pca : projection_method_from_string(m->second);
    // Raw records on the semi dims, the space both views share.
    Matrix raw = v.semi.x;
    const Matrix full_on_semi = v.full.x.gather_cols(v.semi.dims);
    for (std::size_t i = 0; i < full_on_semi.rows(); ++i) raw.append_row(full_on_semi.row(i));
    const std::uint64_t seed = options_.seed.value_or(s->pretrain_config.seed);
    const Projection2D proj = project2d(raw, method, seed);
    Json views_json = Json::array();
    for (ViewKind k : views) views_json.push_back(to_string(k));
    return Json{{"layout", to_json(layout)}, {"projection", to_json(proj, rows)}, {"views", views_json}};
  });
}

Json Service::set_negative(const std::string& id, const Json& body) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  return guarded([&] {
    require_idle(*s);
    require_stage(*s, {Stage::sampling}, "negative sampling");
    if (!body.is_object()) fail(ApiCode::bad_request, "request body must be a JSON object");
    const ViewKind view = view_kind_from_string(body.value("view", "semi"));
    const ViewPair& v = s->data->train;
    std::vector<std::size_t> rows = body.contains("rows") ? body.at("rows").get<std::vector<std::size_t>>()
                                                          : (view == ViewKind::semi ? v.semi.rows : v.full.rows);
    if (body.value("clear", false)) s->sampling.negatives.clear();
    if (body.contains("m")) {
      const double m = body.at("m").get<double>();
      if (!(m >= 0.0 && m <= 1.0)) fail(ApiCode::bad_request, "m must lie in [0, 1]");
      s->momentum = m;
    }
    const NegativeStrategy kind = negative_strategy_from_string(body.value("strategy", "random"));
    const SamplingStrategy strategy{kind, body.value("rate", 1.0)};
    std::uint64_t seed = body.value("seed", s->pretrain_config.seed);
    if (options_.seed) seed = *options_.seed;

    std::vector<NegativeRef> refs;
    for (std::size_t r : rows) {
      refs.push_back({view, r});
      negative_row(s->ds, v, refs.back());  // validates the row
    }
    NegativeDelta delta;
    if (kind == NegativeStrategy::manual) {
      for (const NegativeRef& r : refs) {
        if (s->sampling.negatives.add({r, NegativeStrategy::manual})) {
          delta.added.push_back({r, NegativeStrategy::manual});
        } else {
          ++delta.duplicates;
        }
      }
      delta.selected = refs.size();
    } else {
      strategy.validate();
      const Representation rep = body.contains("representation")
                                     ? representation_from_string(body.at("representation").get<std::string>())
                                     : default_representation(s->pretrain_report.semi_validation);
      const CandidateSet cs = negative_candidates(s->ds, v, s->pair, refs, rep);
      delta = sample_negatives(s->sampling.negatives, cs.candidates, strategy, seed);
      for (const NegativeRef& r : cs.skipped) delta.warnings.push_back("row " + std::to_string(r.row) + " skipped: zero representation");
    }
    return Json{{"collection", collection_json(s->sampling.negatives)}, {"delta", to_json(delta)}, {"m", s->momentum}};
  });
}

namespace {

Json positive_payload(const Session& s, std::size_t k) {
  const BinSummary bins = bin_summary(s.sampling.mapping, s.data->train.semi, s.data->train.full, k);
  return Json{{"representation", to_string(s.sampling.mapping.representation)},
              {"rule", to_string(s.sampling.mapping.rule)},
              {"mapped", s.sampling.mapping.mapped()},
              {"semi_rows", s.sampling.mapping.matches.size()},
              {"mean_similarity", s.sampling.mapping.mean_similarity},
              {"label_norm", s.sampling.mapping.label_norm},
              {"bins", to_json(bins)}};
}

std::size_t default_bins(const Session& s) {
  return s.ds.encoding.task == Task::classification ? std::max<std::size_t>(2, s.ds.encoding.class_count()) : 4;
}

}  // namespace

Json Service::get_positive(const std::string& id, const Query& query) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  return guarded([&] {
    require_stage(*s, {Stage::sampling, Stage::train, Stage::infer}, "positive summary");
    if (!s->positive_set) fail(ApiCode::invalid_stage, "no positive mapping has been set");
    return positive_payload(*s, parse_size(query, "k", default_bins(*s)));
  });
}

Json Service::set_positive(const std::string& id, const Json& body) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  return guarded([&] {
    require_idle(*s);
    require_stage(*s, {Stage::sampling}, "positive sampling");
    if (!body.is_object()) fail(ApiCode::bad_request, "request body must be a JSON object");
    const Representation rep = body.contains("representation")
                                   ? representation_from_string(body.at("representation").get<std::string>())
                                   : default_representation(s->pretrain_report.semi_validation);
    const NoMatchRule rule = no_match_rule_from_string(body.value("rule", "below-mean"));
    const std::size_t k = body.value("k", default_bins(*s));
    PositiveMapping mapping = build_positive_mapping(s->data->train, s->pair, rep, rule);
    bin_summary(mapping, s->data->train.semi, s->data->train.full, k);  // validates k before committing
    s->sampling.mapping = std::move(mapping);
    s->positive_set = true;
    return positive_payload(*s, k);
  });
}

Json Service::start_training(const std::string& id, const Json& body) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  return guarded([&] {
    require_idle(*s);
    require_stage(*s, {Stage::sampling, Stage::train}, "training");
    if (!s->positive_set) fail(ApiCode::invalid_stage, "set the positive mapping before training");
    TrainConfig base;
    base.momentum = s->momentum;
    Json cfg = body.is_object() ? body : Json::object();
    CollapseRule rule;
    if (cfg.contains("collapse")) {
      const Json c = cfg.at("collapse");
      rule.window = c.value("window", rule.window);
      rule.mean_threshold = c.value("mean_threshold", rule.mean_threshold);
      rule.variance_threshold = c.value("variance_threshold", rule.variance_threshold);
      if (rule.window == 0) fail(ApiCode::bad_request, "collapse window must be >= 1");
      cfg.erase("collapse");
    }
    TrainConfig config = train_config_from_json(cfg, base);
    if (options_.seed) config.seed = *options_.seed;

    if (s->worker.joinable()) s->worker.join();
    auto run = std::make_shared<Run>();
    run->id = s->next_run++;
    run->config = config;
    s->runs.push_back(run);
    s->stage = Stage::train;
    s->stop = false;
    s->running = true;

    Session* sp = s.get();
    ModelPair start = s->pair;
    s->worker = std::thread([sp, run, start = std::move(start), rule]() mutable {
      TrainHooks hooks;
      hooks.stop = &sp->stop;
      hooks.collapse = rule;
      hooks.on_epoch = [&](const EpochMetrics& m) { run->stream->push(sse_frame("metrics", to_json(m))); };
      ModelPair pair = std::move(start);
      try {
        run->recorder = train(pair, *sp->data, sp->sampling, run->config, hooks);
      } catch (const std::exception& e) {
        run->error = e.what();
      }
      {
        std::lock_guard lock(sp->gate);
        sp->pair = pair;
        sp->last_config = run->config;
        if (!run->recorder.epochs.empty()) sp->last_metrics = run->recorder.epochs.back();
        run->finished = true;
        sp->running = false;
      }
      run->stream->finish(sse_frame("done", done_json(*run)));
    });
    return Json{{"run_id", run->id},
                {"stage", to_string(s->stage)},
                {"events", "/sessions/" + s->id + "/runs/" + std::to_string(run->id) + "/events"},
                {"config", to_json(config)}};
  });
}

Json Service::stop_training(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  const bool running = s->running;
  if (running) s->stop = true;
  return Json{{"stopping", running}, {"stage", to_string(s->stage)}};
}

Json Service::metrics(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  Json runs = Json::array();
  for (const auto& r : s->runs) {
    Json epochs = Json::array();
    if (r->finished) {
      for (const EpochMetrics& m : r->recorder.epochs) epochs.push_back(to_json(m));
    }
    Json j = run_json(*r);
    j["metrics"] = epochs;
    runs.push_back(j);
  }
  return Json{{"runs", runs}, {"pretrain", to_json(s->pretrain_report)}};
}

std::shared_ptr<RunStream> Service::stream(const std::string& id, std::uint64_t run_id) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  for (const auto& r : s->runs) {
    if (r->id == run_id) return r->stream;
  }
  fail(ApiCode::not_found, "no run " + std::to_string(run_id));
}

Json Service::save_log(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  return guarded([&] {
    require_idle(*s);
    require_stage(*s, {Stage::train, Stage::infer}, "saving a log entry");
    if (!s->last_config) fail(ApiCode::invalid_stage, "no completed training run to save");
    Checkpoint cp{*s->last_config, s->last_metrics, s->pair, s->sampling};
    const std::uint64_t lid = s->log.save(cp, static_cast<std::int64_t>(std::time(nullptr)));
    if (options_.log_dir) {
      std::filesystem::create_directories(*options_.log_dir);
      write_checkpoint(*options_.log_dir + "/" + s->id + "-" + std::to_string(lid) + ".civc", cp);
    }
    const LogEntry& e = s->log.get(lid);
    return Json{{"id", e.id},
                {"timestamp", e.timestamp},
                {"config", to_json(e.checkpoint.config)},
                {"final_metrics", e.checkpoint.final_metrics ? to_json(*e.checkpoint.final_metrics) : Json(nullptr)}};
  });
}

Json Service::list_logs(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  Json out = Json::array();
  for (const LogEntry& e : s->log.entries()) {
    out.push_back({{"id", e.id},
                   {"timestamp", e.timestamp},
                   {"config", to_json(e.checkpoint.config)},
                   {"final_metrics",
                    e.checkpoint.final_metrics ? to_json(*e.checkpoint.final_metrics) : Json(nullptr)}});
  }
  return Json{{"logs", out}};
}

Json Service::switch_log(const std::string& id, std::uint64_t log_id) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  return guarded([&] {
    require_idle(*s);
    require_stage(*s, {Stage::sampling, Stage::train, Stage::infer}, "switching logs");
    const Checkpoint& cp = s->log.switch_to(log_id);
    s->pair = cp.pair;
    s->sampling = cp.sampling;
    s->positive_set = true;
    s->last_config = cp.config;
    s->last_metrics = cp.final_metrics;
    s->stage = Stage::sampling;
    return Json{{"id", log_id}, {"stage", to_string(s->stage)}};
  });
}

Json Service::delete_log(const std::string& id, std::uint64_t log_id) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  return guarded([&] {
    s->log.remove(log_id);
    return Json{{"deleted", log_id}};
  });
}

Json Service::infer(const std::string& id, const Json& body) {
  auto s = find(id);
  std::lock_guard lock(s->gate);
  return guarded([&] {
    require_idle(*s);
    require_stage(*s, {Stage::train, Stage::infer}, "inference");
    if (!s->last_config) fail(ApiCode::invalid_stage, "train the model before inference");
    const Json req = body.is_object() ? body : Json::object();

    const RawTable* table = &s->table;
    const EncodedDataset* ds = &s->ds;
    RawTable uploaded;
    EncodedDataset uploaded_ds;
    std::vector<std::size_t> rows;
    if (req.contains("path")) {
      SchemaHints hints;
      hints.label = s->table.label;
      hints.task = s->table.task;
      hints.require_label = false;
      for (const ColumnEncoding& c : s->ds.encoding.columns) {
        if (c.kind == ColumnKind::categorical) hints.categorical.push_back(c.name);
      }
      const std::string path = req.at("path").get<std::string>();
      if (!std::filesystem::is_regular_file(path)) fail(ApiCode::bad_request, "cannot read " + path);
      uploaded = load_csv(path, hints);
      for (const std::string& name : s->selected) {
        if (!uploaded.has_column(name)) fail(ApiCode::bad_request, "inference file lacks column '" + name + "'");
      }
      uploaded_ds = apply_encoding(s->ds.encoding, uploaded);
      table = &uploaded;
      ds = &uploaded_ds;
      for (std::size_t r = 0; r < uploaded.rows.size(); ++r) rows.push_back(r);
    } else if (req.contains("rows")) {
      rows = req.at("rows").get<std::vector<std::size_t>>();
      for (std::size_t r : rows) {
        if (r >= s->table.rows.size()) fail(ApiCode::not_found, "row " + std::to_string(r) + " out of range");
      }
    } else {
      const std::string split = req.value("split", "test");
      if (split == "test") {
        rows = s->split.test;
      } else if (split == "validation") {
        rows = s->split.validation;
      } else if (split == "train") {
        rows = s->split.train;
      } else if (split == "all") {
        for (std::size_t r = 0; r < s->table.rows.size(); ++r) rows.push_back(r);
      } else {
        fail(ApiCode::bad_request, "unknown split '" + split + "'");
      }
    }

    const FilterResult filter = inference_filter(*table, s->selected, rows);
    const std::vector<std::size_t> dims = s->ds.encoding.dims_of(s->selected_positions);
    Matrix x(0, dims.size());
    for (std::size_t r : filter.kept) {
      std::vector<double> v;
      for (std::size_t d : dims) v.push_back(ds->features(r, d));
      x.append_row(v);
    }
    Json predictions = Json::array();
    if (x.rows() > 0) {
      const Matrix pred = forward(s->pair.semi, x).prediction;
      const auto attributions = attribute_rows(s->pair.semi, x, s->ds.encoding, s->selected_positions);
      const bool regression = s->ds.encoding.task == Task::regression;
      for (std::size_t i = 0; i < filter.kept.size(); ++i) {
        Json p{{"row", filter.kept[i]}};
        if (regression) {
          p["prediction"] = s->ds.encoding.unscale_label(pred(i, 0));
        } else {
          const auto logits = pred.row(i);
          const double mx = *std::max_element(logits.begin(), logits.end());
          std::vector<double> prob;
          double z = 0.0;
          for (double l : logits) z += std::exp(l - mx);
          for (double l : logits) prob.push_back(std::exp(l - mx) / z);
          const auto best = static_cast<std::size_t>(std::max_element(prob.begin(), prob.end()) - prob.begin());
          p["prediction"] = s->ds.encoding.classes.at(best);
          p["probabilities"] = prob;
        }
        if (table->has_column(table->label)) {
          const Cell& c = table->rows[filter.kept[i]][table->label_index()];
          if (const double* d = std::get_if<double>(&c)) p["label"] = *d;
          if (const std::string* str = std::get_if<std::string>(&c)) p["label"] = *str;
        }
        p["attribution"] = to_json(attributions[i]);
        predictions.push_back(p);
      }
    }
    Json discarded = Json::array();
    for (std::size_t r : filter.discarded) {
      Json missing = Json::array();
      for (const std::string& name : s->selected) {
        if (std::holds_alternative<std::monostate>(table->rows[r][table->column_index(name)])) missing.push_back(name);
      }
      discarded.push_back({{"row", r}, {"missing", missing}});
    }
    s->stage = Stage::infer;
    return Json{{"stage", to_string(s->stage)},
                {"task", to_string(s->ds.encoding.task)},
                {"predictions", predictions},
                {"discarded", discarded}};
  });
}

void Service::wait_idle(const std::string& id) {
  auto s = find(id);
  std::thread t;
  {
    std::lock_guard lock(s->gate);
    if (s->worker.joinable()) t = std::move(s->worker);
  }
  if (t.joinable()) t.join();
}

}  // namespace civ
