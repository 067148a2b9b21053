#pragma once

#include <cstdint>

namespace civ {

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 20;
  double temperature = 1.0;
  double contrastive_weight = 0.1;  // M
  double momentum = 0.99;           // m
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::size_t queue_capacity = 256;

  void validate() const;
};

struct PretrainConfig {
  std::size_t epochs = 20;
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

}  // namespace civ
