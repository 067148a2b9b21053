#pragma once

#include "json.hpp"

#include "civ/clengine/config.hpp"
#include "civ/clengine/metrics.hpp"
#include "civ/clengine/trainer.hpp"

namespace civ {

using Json = nlohmann::ordered_json;

Json to_json(const MlpSpec& spec);
MlpSpec mlp_spec_from_json(const Json& j);

Json to_json(const TrainConfig& c);
// Missing keys keep their defaults; unknown keys are a ConfigError.
TrainConfig train_config_from_json(const Json& j, TrainConfig base = {});
Json to_json(const PretrainConfig& c);
PretrainConfig pretrain_config_from_json(const Json& j, PretrainConfig base = {});

Json to_json(const EpochMetrics& m);
EpochMetrics epoch_metrics_from_json(const Json& j);
Json to_json(const ScoreStats& s);
Json to_json(const PretrainReport& r);

Json to_json(const PositiveMapping& m);
PositiveMapping positive_mapping_from_json(const Json& j);
Json to_json(const NegativeCollection& c);
NegativeCollection negative_collection_from_json(const Json& j);

}  // namespace civ
