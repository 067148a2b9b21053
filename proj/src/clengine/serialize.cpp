#include "civ/clengine/serialize.hpp"

#include <set>

#include "civ/error.hpp"

namespace civ {

namespace {

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> optional_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw ConfigError(std::string("unknown ") + what + " field '" + item.key() + "'");
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

Json to_json(const MlpSpec& spec) {
  Json head{{"kind", to_string(spec.head.kind)}, {"classes", spec.head.classes}};
  return Json{{"input_dim", spec.input_dim},
              {"hidden_dims", spec.hidden_dims},
              {"embedding_dim", spec.embedding_dim},
              {"head", head},
              {"activation", to_string(spec.activation)}};
}

MlpSpec mlp_spec_from_json(const Json& j) {
  reject_unknown(j, {"input_dim", "hidden_dims", "embedding_dim", "head", "activation"}, "encoder");
  MlpSpec s;
  read(j, "input_dim", s.input_dim);
  read(j, "hidden_dims", s.hidden_dims);
  if (j.contains("hidden_dims") && !j.contains("embedding_dim") && !s.hidden_dims.empty()) {
    s.embedding_dim = s.hidden_dims.back();
  }
  read(j, "embedding_dim", s.embedding_dim);
  if (j.contains("activation")) s.activation = activation_from_string(j.at("activation").get<std::string>());
  if (j.contains("head")) {
    const Json& h = j.at("head");
    const std::string kind = h.value("kind", "regression");
    if (kind == "regression") {
      s.head = {HeadKind::regression, 1};
    } else if (kind == "classification") {
      s.head = {HeadKind::classification, h.value<std::size_t>("classes", 2)};
    } else {
      throw ConfigError("unknown head kind '" + kind + "'");
    }
  }
  return s;
}

Json to_json(const TrainConfig& c) {
  return Json{{"learning_rate", c.learning_rate},   {"epochs", c.epochs},
              {"temperature", c.temperature},       {"contrastive_weight", c.contrastive_weight},
              {"momentum", c.momentum},             {"batch_size", c.batch_size},
              {"seed", c.seed},                     {"queue_capacity", c.queue_capacity}};
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
  reject_unknown(j,
                 {"learning_rate", "epochs", "temperature", "contrastive_weight", "momentum", "batch_size", "seed",
                  "queue_capacity"},
                 "train config");
  read(j, "learning_rate", c.learning_rate);
  read(j, "epochs", c.epochs);
  read(j, "temperature", c.temperature);
  read(j, "contrastive_weight", c.contrastive_weight);
  read(j, "momentum", c.momentum);
  read(j, "batch_size", c.batch_size);
  read(j, "seed", c.seed);
  read(j, "queue_capacity", c.queue_capacity);
  c.validate();
  return c;
}

Json to_json(const PretrainConfig& c) {
  return Json{{"epochs", c.epochs}, {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"seed", c.seed}};
}

PretrainConfig pretrain_config_from_json(const Json& j, PretrainConfig c) {
  reject_unknown(j, {"epochs", "learning_rate", "batch_size", "seed"}, "pretrain config");
  read(j, "epochs", c.epochs);
  read(j, "learning_rate", c.learning_rate);
  read(j, "batch_size", c.batch_size);
  read(j, "seed", c.seed);
  c.validate();
  return c;
}

Json to_json(const EpochMetrics& m) {
  return Json{{"epoch", m.epoch},
              {"train_loss", m.train_loss},
              {"task_loss", m.task_loss},
              {"contrastive_loss", m.contrastive_loss},
              {"validation_metric", optional_json(m.validation_metric)},
              {"full_validation_metric", optional_json(m.full_validation_metric)},
              {"mean_pos", optional_json(m.mean_pos)},
              {"mean_neg", optional_json(m.mean_neg)},
              {"var_neg", optional_json(m.var_neg)},
              {"collapse_flag", m.collapse_flag}};
}

EpochMetrics epoch_metrics_from_json(const Json& j) {
  EpochMetrics m;
  m.epoch = j.at("epoch").get<std::size_t>();
  m.train_loss = j.at("train_loss").get<double>();
  m.task_loss = j.value("task_loss", 0.0);
  m.contrastive_loss = j.value("contrastive_loss", 0.0);
  m.validation_metric = optional_from(j, "validation_metric");
  m.full_validation_metric = optional_from(j, "full_validation_metric");
  m.mean_pos = optional_from(j, "mean_pos");
  m.mean_neg = optional_from(j, "mean_neg");
  m.var_neg = optional_from(j, "var_neg");
  m.collapse_flag = j.value("collapse_flag", false);
  return m;
}

Json to_json(const ScoreStats& s) {
  return Json{{"mean_pos", optional_json(s.mean_pos)},
              {"mean_neg", optional_json(s.mean_neg)},
              {"var_neg", optional_json(s.var_neg)}};
}

Json to_json(const PretrainReport& r) {
  Json epochs = Json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"full_loss", e.full_loss}, {"semi_loss", e.semi_loss}});
  }
  return Json{{"epochs", epochs},
              {"full_validation", optional_json(r.full_validation)},
              {"semi_validation", optional_json(r.semi_validation)}};
}

Json to_json(const PositiveMapping& m) {
  Json matches = Json::array();
  for (const PositiveMatch& p : m.matches) {
    matches.push_back({{"semi_row", p.semi_row},
                       {"full_row", p.full_row == PositiveMatch::none ? Json(nullptr) : Json(p.full_row)},
                       {"candidate_row", p.candidate_row == PositiveMatch::none ? Json(nullptr) : Json(p.candidate_row)},
                       {"score", p.score},
                       {"similarity", p.similarity},
                       {"mu", p.mu},
                       {"self_paired", p.self_paired},
                       {"degenerate", p.degenerate}});
  }
  return Json{{"representation", to_string(m.representation)},
              {"rule", to_string(m.rule)},
              {"label_norm", m.label_norm},
              {"mean_similarity", m.mean_similarity},
              {"matches", matches}};
}

PositiveMapping positive_mapping_from_json(const Json& j) {
  PositiveMapping m;
  m.representation = representation_from_string(j.at("representation").get<std::string>());
  m.rule = no_match_rule_from_string(j.at("rule").get<std::string>());
  m.label_norm = j.at("label_norm").get<double>();
  m.mean_similarity = j.at("mean_similarity").get<double>();
  for (const Json& p : j.at("matches")) {
    PositiveMatch x;
    x.semi_row = p.at("semi_row").get<std::size_t>();
    x.full_row = p.at("full_row").is_null() ? PositiveMatch::none : p.at("full_row").get<std::size_t>();
    x.candidate_row = p.at("candidate_row").is_null() ? PositiveMatch::none : p.at("candidate_row").get<std::size_t>();
    x.score = p.at("score").get<double>();
    x.similarity = p.at("similarity").get<double>();
    x.mu = p.at("mu").get<double>();
    x.self_paired = p.at("self_paired").get<bool>();
    x.degenerate = p.at("degenerate").get<bool>();
    m.matches.push_back(x);
  }
  return m;
}

Json to_json(const NegativeCollection& c) {
  Json out = Json::array();
  for (const NegativeEntry& e : c.entries()) {
    out.push_back({{"view", to_string(e.ref.view)}, {"row", e.ref.row}, {"provenance", to_string(e.provenance)}});
  }
  return out;
}

NegativeCollection negative_collection_from_json(const Json& j) {
  NegativeCollection c;
  for (const Json& e : j) {
    c.add({{view_kind_from_string(e.at("view").get<std::string>()), e.at("row").get<std::size_t>()},
           negative_strategy_from_string(e.at("provenance").get<std::string>())});
  }
  return c;
}

}  // namespace civ
