#include "civ/numcore/mlp.hpp"

#include <cmath>
#include <cstring>

#include "civ/error.hpp"
#include "civ/rng.hpp"

namespace civ {

const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

const char* to_string(HeadKind h) {
  return h == HeadKind::regression ? "regression" : "classification";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + s + "'");
}

void MlpSpec::validate() const {
  if (input_dim == 0) throw ConfigError("mlp: input_dim must be >= 1");
  if (hidden_dims.empty()) throw ConfigError("mlp: at least one hidden layer is required");
  for (std::size_t d : hidden_dims) {
    if (d == 0) throw ConfigError("mlp: hidden dims must be >= 1");
  }
  if (embedding_dim != hidden_dims.back()) {
    throw ConfigError("mlp: embedding_dim must equal the last hidden dim");
  }
  if (head.kind == HeadKind::classification && head.classes < 2) {
    throw ConfigError("mlp: classification head needs >= 2 classes");
  }
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> layer_shapes(const MlpSpec& spec) {
  std::vector<std::pair<std::size_t, std::size_t>> shapes;  // (out, in)
  std::size_t in = spec.input_dim;
  for (std::size_t d : spec.hidden_dims) {
    shapes.emplace_back(d, in);
    in = d;
  }
  shapes.emplace_back(spec.head.outputs(), in);
  return shapes;
}

double activate(Activation a, double z) { return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z); }

// Derivative expressed through the pre-activation z and post-activation y.
double activate_grad(Activation a, double z, double y) {
  return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - y * y;
}

Matrix affine(const Matrix& x, const LayerParams& layer) {
  Matrix z = matmul_bt(x, layer.weight);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
  }
  return z;
}

void accumulate_layer(LayerParams& grad, const Matrix& dz, const Matrix& input) {
  grad.weight = matmul_at(dz, input);
  grad.bias.assign(dz.cols(), 0.0);
  for (std::size_t r = 0; r < dz.rows(); ++r) {
    const auto row = dz.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) grad.bias[c] += row[c];
  }
}

void check_upstream(const ForwardCache& cache, const MlpParams& params, const Upstream& up) {
  const std::size_t n = cache.input.rows();
  if (!up.d_embedding.empty() &&
      (up.d_embedding.rows() != n || up.d_embedding.cols() != params.spec.embedding_dim)) {
    throw ShapeError("backward: d_embedding shape mismatch");
  }
  if (!up.d_prediction.empty() &&
      (up.d_prediction.rows() != n || up.d_prediction.cols() != params.spec.head.outputs())) {
    throw ShapeError("backward: d_prediction shape mismatch");
  }
}

// Shared reverse pass. Fills `grads` when non-null and returns d/d input.
Matrix reverse(const MlpParams& params, const ForwardCache& cache, const Upstream& up,
               Gradients* grads) {
  if (cache.fingerprint != fingerprint(params) || cache.pre.size() != params.encoder_layers()) {
    throw ContractError("backward: cache was produced by different parameters");
  }
  check_upstream(cache, params, up);
  const std::size_t n = cache.input.rows();
  const std::size_t enc = params.encoder_layers();
  const Activation act = params.spec.activation;
  if (grads) grads->layers.resize(params.layers.size());

  const LayerParams& head = params.layers.back();
  Matrix d_emb_post(n, params.spec.embedding_dim);  // d/d act(embedding)
  if (!up.d_prediction.empty()) {
    if (grads) accumulate_layer(grads->layers.back(), up.d_prediction, cache.post.back());
    d_emb_post = matmul(up.d_prediction, head.weight);
  } else if (grads) {
    grads->layers.back().weight = Matrix(head.weight.rows(), head.weight.cols());
    grads->layers.back().bias.assign(head.bias.size(), 0.0);
  }

  Matrix dz(n, params.spec.embedding_dim);
  {
    const Matrix& z = cache.pre.back();
    const Matrix& y = cache.post.back();
    for (std::size_t i = 0; i < dz.size(); ++i) {
      dz.data()[i] = d_emb_post.data()[i] * activate_grad(act, z.data()[i], y.data()[i]);
      if (!up.d_embedding.empty()) dz.data()[i] += up.d_embedding.data()[i];
    }
  }

  for (std::size_t li = enc; li-- > 0;) {
    const Matrix& layer_input = li == 0 ? cache.input : cache.post[li - 1];
    if (grads) accumulate_layer(grads->layers[li], dz, layer_input);
    Matrix da = matmul(dz, params.layers[li].weight);
    if (li == 0) return da;
    const Matrix& z = cache.pre[li - 1];
    const Matrix& y = cache.post[li - 1];
    for (std::size_t i = 0; i < da.size(); ++i) {
      da.data()[i] *= activate_grad(act, z.data()[i], y.data()[i]);
    }
    dz = std::move(da);
  }
  return {};
}

}  // namespace

MlpParams MlpParams::init(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  MlpParams p;
  p.spec = spec;
  for (const auto& [out, in] : layer_shapes(spec)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    LayerParams layer{Matrix(out, in), std::vector<double>(out)};
    for (double& w : layer.weight.data()) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

MlpParams MlpParams::zeros(const MlpSpec& spec) {
  spec.validate();
  MlpParams p;
  p.spec = spec;
  for (const auto& [out, in] : layer_shapes(spec)) {
    p.layers.push_back({Matrix(out, in), std::vector<double>(out, 0.0)});
  }
  return p;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

Gradients Gradients::zeros_like(const MlpParams& params) {
  Gradients g;
  for (const auto& l : params.layers) {
    g.layers.push_back({Matrix(l.weight.rows(), l.weight.cols()), std::vector<double>(l.bias.size())});
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.layers.size() != layers.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& a = layers[i];
    const auto& b = other.layers[i];
    if (a.weight.size() != b.weight.size() || a.bias.size() != b.bias.size()) {
      throw ShapeError("gradient shape mismatch");
    }
    for (std::size_t k = 0; k < a.weight.size(); ++k) a.weight.data()[k] += b.weight.data()[k];
    for (std::size_t k = 0; k < a.bias.size(); ++k) a.bias[k] += b.bias[k];
  }
  return *this;
}

ForwardResult forward(const MlpParams& params, const Matrix& batch) {
  if (batch.cols() != params.spec.input_dim) {
    throw ShapeError("forward: batch has " + std::to_string(batch.cols()) + " columns, model expects " +
                     std::to_string(params.spec.input_dim));
  }
  ForwardResult out;
  out.cache.fingerprint = fingerprint(params);
  out.cache.input = batch;
  const Activation act = params.spec.activation;
  const std::size_t enc = params.encoder_layers();
  const Matrix* x = &batch;
  for (std::size_t li = 0; li < enc; ++li) {
    Matrix z = affine(*x, params.layers[li]);
    Matrix y = z;
    for (double& v : y.data()) v = activate(act, v);
    out.cache.pre.push_back(std::move(z));
    out.cache.post.push_back(std::move(y));
    x = &out.cache.post.back();
  }
  out.embedding = out.cache.pre.back();
  out.prediction = affine(out.cache.post.back(), params.layers.back());
  return out;
}

Gradients backward(const MlpParams& params, const ForwardCache& cache, const Upstream& upstream) {
  Gradients g;
  reverse(params, cache, upstream, &g);
  return g;
}

Matrix input_gradient(const MlpParams& params, const ForwardCache& cache, const Upstream& upstream) {
  return reverse(params, cache, upstream, nullptr);
}

MlpParams sgd_step(const MlpParams& params, const Gradients& grads, double lr) {
  if (grads.layers.size() != params.layers.size()) throw ShapeError("sgd_step: layer count mismatch");
  MlpParams next = params;
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const auto& g = grads.layers[li];
    auto& p = next.layers[li];
    if (g.weight.size() != p.weight.size() || g.bias.size() != p.bias.size()) {
      throw ShapeError("sgd_step: shape mismatch in layer " + std::to_string(li));
    }
    bool finite = g.weight.all_finite();
    for (double b : g.bias) finite = finite && std::isfinite(b);
    if (!finite) throw TrainingError("sgd_step: non-finite gradient in layer " + std::to_string(li));
    for (std::size_t k = 0; k < p.weight.size(); ++k) p.weight.data()[k] -= lr * g.weight.data()[k];
    for (std::size_t k = 0; k < p.bias.size(); ++k) p.bias[k] -= lr * g.bias[k];
  }
  return next;
}

std::uint64_t fingerprint(const MlpParams& params) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& l : params.layers) {
    for (double v : l.weight.data()) mix(v);
    for (double v : l.bias) mix(v);
  }
  return h;
}

std::vector<double> flatten(const MlpParams& params) {
  std::vector<double> out;
  out.reserve(params.parameter_count());
  for (const auto& l : params.layers) {
    out.insert(out.end(), l.weight.data().begin(), l.weight.data().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

std::vector<double> flatten(const Gradients& grads) {
  std::vector<double> out;
  for (const auto& l : grads.layers) {
    out.insert(out.end(), l.weight.data().begin(), l.weight.data().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

MlpParams unflatten(const MlpSpec& spec, std::span<const double> values) {
  MlpParams p = MlpParams::zeros(spec);
  if (values.size() != p.parameter_count()) throw ShapeError("unflatten: wrong parameter count");
  std::size_t k = 0;
  for (auto& l : p.layers) {
    for (double& w : l.weight.data()) w = values[k++];
    for (double& b : l.bias) b = values[k++];
  }
  return p;
}

}  // namespace civ
