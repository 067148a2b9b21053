#include "civ/clengine/model_pair.hpp"

#include "civ/error.hpp"
#include "civ/rng.hpp"

namespace civ {

MlpSpec with_input_dim(MlpSpec spec, std::size_t input_dim) {
  spec.input_dim = input_dim;
  return spec;
}

ModelPair ModelPair::create(const MlpSpec& encoder, std::size_t full_width, std::size_t semi_width,
                            std::uint64_t seed) {
  Rng rng(seed);
  const std::uint64_t full_seed = rng.next();
  const std::uint64_t semi_seed = rng.next();
  ModelPair p;
  p.full = MlpParams::init(with_input_dim(encoder, full_width), full_seed);
  p.semi = MlpParams::init(with_input_dim(encoder, semi_width), semi_seed);
  p.sync_momentum();
  return p;
}

void ModelPair::sync_momentum() {
  momentum_full = full;
  momentum_semi = semi;
}

MlpParams momentum_update(const MlpParams& momentum, const MlpParams& source, double m) {
  if (!(m >= 0.0 && m <= 1.0)) throw ConfigError("momentum must lie in [0, 1]");
  if (momentum.layers.size() != source.layers.size()) throw ShapeError("momentum_update: layer count mismatch");
  MlpParams out = momentum;
  for (std::size_t li = 0; li < out.layers.size(); ++li) {
    auto& dst = out.layers[li];
    const auto& src = source.layers[li];
    if (dst.weight.size() != src.weight.size() || dst.bias.size() != src.bias.size()) {
      throw ShapeError("momentum_update: shape mismatch in layer " + std::to_string(li));
    }
    for (std::size_t k = 0; k < dst.weight.size(); ++k) {
      dst.weight.data()[k] = m * dst.weight.data()[k] + (1.0 - m) * src.weight.data()[k];
    }
    for (std::size_t k = 0; k < dst.bias.size(); ++k) dst.bias[k] = m * dst.bias[k] + (1.0 - m) * src.bias[k];
  }
  return out;
}

void momentum_update(ModelPair& pair, double m) {
  pair.momentum_full = momentum_update(pair.momentum_full, pair.full, m);
  pair.momentum_semi = momentum_update(pair.momentum_semi, pair.semi, m);
}

}  // namespace civ
