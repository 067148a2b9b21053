#pragma once

#include <cstdint>

#include "civ/numcore/mlp.hpp"

namespace civ {

// Full model, semi model and their momentum encoders. Full and semi share every
// architectural choice except input width, so their embeddings are comparable.
struct ModelPair {
  MlpParams full;
  MlpParams semi;
  MlpParams momentum_full;
  MlpParams momentum_semi;
  bool pretrained = false;

  // Fresh seeded pair; momentum encoders start as exact copies.
  static ModelPair create(const MlpSpec& encoder, std::size_t full_width, std::size_t semi_width,
                          std::uint64_t seed);

  void sync_momentum();

  friend bool operator==(const ModelPair&, const ModelPair&) = default;
};

MlpSpec with_input_dim(MlpSpec spec, std::size_t input_dim);

// theta_hat <- m * theta_hat + (1 - m) * theta, elementwise.
MlpParams momentum_update(const MlpParams& momentum, const MlpParams& source, double m);
void momentum_update(ModelPair& pair, double m);

}  // namespace civ
