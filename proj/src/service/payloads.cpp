#include "civ/service/payloads.hpp"

#include "civ/error.hpp"

namespace civ {

Json to_json(const FeatureStats& s) {
  Json features = Json::array();
  for (const FeatureStat& f : s.features) {
    Json j{{"name", f.name},
           {"kind", to_string(f.kind)},
           {"missing_count", f.missing_count},
           {"missing_rate", f.missing_rate}};
    if (f.kind == ColumnKind::categorical) {
      j["cardinality"] = f.cardinality;
    } else {
      j["min"] = f.min;
      j["max"] = f.max;
    }
    features.push_back(j);
  }
  return Json{{"rows", s.rows}, {"with_missing", s.with_missing()}, {"features", features}};
}

namespace {

Json bins_json(const std::vector<LabelBin>& bins) {
  Json out = Json::array();
  for (const LabelBin& b : bins) {
    out.push_back({{"count", b.count},
                   {"lower", b.lower},
                   {"upper", b.upper},
                   {"min_label", b.min_label},
                   {"max_label", b.max_label},
                   {"feature_means", b.feature_means}});
  }
  return out;
}

}  // namespace

Json to_json(const BinSummary& b) {
  Json links = Json::array();
  for (const BinLink& l : b.links) links.push_back({{"semi_bin", l.semi_bin}, {"full_bin", l.full_bin}, {"count", l.count}});
  return Json{{"k", b.k},
              {"lower", b.lower},
              {"upper", b.upper},
              {"semi_bins", bins_json(b.semi_bins)},
              {"full_bins", bins_json(b.full_bins)},
              {"links", links},
              {"mapped", b.mapped},
              {"warnings", b.warnings}};
}

Json to_json(const CircleLayout& c) {
  Json points = Json::array();
  for (const CirclePoint& p : c.points) points.push_back({{"row", p.row}, {"view", to_string(p.view)}, {"angle", p.angle}});
  Json out{{"anchor_row", c.anchor_row}, {"points", points}, {"diagnostics", c.diagnostics}};
  if (c.subset) {
    out["subset"] = {{"count", c.subset->count},
                     {"mean_angle", c.subset->mean_angle},
                     {"variance", c.subset->variance},
                     {"mean_arc", c.subset->mean_arc},
                     {"variance_arc", c.subset->variance_arc}};
  } else {
    out["subset"] = nullptr;
  }
  return out;
}

Json to_json(const Projection2D& p, const std::vector<std::size_t>& rows) {
  Json points = Json::array();
  for (std::size_t i = 0; i < p.coords.rows(); ++i) {
    points.push_back({{"row", rows.at(i)}, {"x", p.coords(i, 0)}, {"y", p.coords(i, 1)}});
  }
  return Json{{"method", to_string(p.method)}, {"points", points}};
}

Json to_json(const FeatureAttribution& a) {
  return Json{{"features", a.features}, {"importance", a.importance}, {"zero_gradient", a.zero_gradient}};
}

Json to_json(const NegativeDelta& d) {
  Json added = Json::array();
  for (const NegativeEntry& e : d.added) {
    added.push_back({{"view", to_string(e.ref.view)}, {"row", e.ref.row}, {"provenance", to_string(e.provenance)}});
  }
  return Json{{"added", added},
              {"selected", d.selected},
              {"duplicates", d.duplicates},
              {"anchors", d.anchors},
              {"warnings", d.warnings}};
}

Json to_json(const SynthSpec& s) {
  return Json{{"rows", s.rows},
              {"numeric_dims", s.numeric_dims},
              {"categorical_dims", s.categorical_dims},
              {"missing_rate", s.missing_rate},
              {"mechanism", "MCAR"},
              {"task", to_string(s.task)},
              {"seed", s.seed}};
}

SynthSpec synth_spec_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("synthetic spec must be a JSON object");
  SynthSpec s;
  for (const auto& item : j.items()) {
    const std::string& k = item.key();
    const Json& v = item.value();
    if (k == "rows") {
      s.rows = v.get<std::size_t>();
    } else if (k == "numeric_dims") {
      s.numeric_dims = v.get<std::size_t>();
    } else if (k == "categorical_dims") {
      s.categorical_dims = v.get<std::size_t>();
    } else if (k == "missing_rate") {
      s.missing_rate = v.get<double>();
    } else if (k == "mechanism") {
      const std::string m = v.get<std::string>();
      if (m != "MCAR" && m != "mcar") throw ConfigError("only the MCAR mechanism is supported");
    } else if (k == "task") {
      s.task = task_from_string(v.get<std::string>());
    } else if (k == "seed") {
      s.seed = v.get<std::uint64_t>();
    } else {
      throw ConfigError("unknown synthetic spec field '" + k + "'");
    }
  }
  s.validate();
  return s;
}

}  // namespace civ
