#include "civ/clengine/config.hpp"

#include "civ/error.hpp"

namespace civ {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!(contrastive_weight >= 0.0)) throw ConfigError("contrastive weight M must be >= 0");
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw ConfigError("momentum m must lie in [0, 1]");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (queue_capacity == 0) throw ConfigError("queue_capacity must be >= 1");
}

void PretrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
}

}  // namespace civ
