#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "civ/numcore/matrix.hpp"

namespace civ {

enum class Activation { relu, tanh };
enum class HeadKind { regression, classification };

const char* to_string(Activation a);
const char* to_string(HeadKind h);
Activation activation_from_string(const std::string& s);

struct HeadSpec {
  HeadKind kind = HeadKind::regression;
  std::size_t classes = 1;  // ignored for regression

  std::size_t outputs() const { return kind == HeadKind::regression ? 1 : classes; }
  friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
};

// Encoder: input -> hidden_dims[0] -> ... -> hidden_dims.back(). The last encoder layer
// is linear and its output is the embedding; the task head reads act(embedding).
struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims{64, 32};
  std::size_t embedding_dim = 32;
  HeadSpec head;
  Activation activation = Activation::relu;

  void validate() const;
  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

// weight is out x in.
struct LayerParams {
  Matrix weight;
  std::vector<double> bias;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct MlpParams {
  MlpSpec spec;
  std::vector<LayerParams> layers;  // encoder layers, then the head

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  static MlpParams init(const MlpSpec& spec, std::uint64_t seed);
  static MlpParams zeros(const MlpSpec& spec);

  std::size_t parameter_count() const;
  std::size_t encoder_layers() const { return layers.size() - 1; }

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

struct Gradients {
  std::vector<LayerParams> layers;

  static Gradients zeros_like(const MlpParams& params);
  Gradients& operator+=(const Gradients& other);
};

// Activation record produced by forward(). `fingerprint` ties it to the exact
// parameter values used so that backward() can reject stale caches.
struct ForwardCache {
  std::uint64_t fingerprint = 0;
  Matrix input;
  std::vector<Matrix> pre;   // per encoder layer, before activation
  std::vector<Matrix> post;  // per encoder layer, after activation
};

struct ForwardResult {
  Matrix embedding;
  Matrix prediction;
  ForwardCache cache;
};

// Either member may be left empty (0 x 0), meaning no gradient arrives on that output.
struct Upstream {
  Matrix d_embedding;
  Matrix d_prediction;
};

ForwardResult forward(const MlpParams& params, const Matrix& batch);

Gradients backward(const MlpParams& params, const ForwardCache& cache, const Upstream& upstream);

// d(upstream-weighted outputs)/d(input), same shape as the cached input batch.
Matrix input_gradient(const MlpParams& params, const ForwardCache& cache, const Upstream& upstream);

// p' = p - lr * g. Throws TrainingError naming the first layer with a non-finite gradient.
MlpParams sgd_step(const MlpParams& params, const Gradients& grads, double lr);

std::uint64_t fingerprint(const MlpParams& params);

std::vector<double> flatten(const MlpParams& params);
std::vector<double> flatten(const Gradients& grads);
MlpParams unflatten(const MlpSpec& spec, std::span<const double> values);

}  // namespace civ
