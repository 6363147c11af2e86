#include "diccae/mlp.hpp"

#include <cmath>
#include <string>

#include "diccae/errors.hpp"
#include "diccae/kernels.hpp"

namespace diccae {
namespace {

DenseLayer glorot_layer(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  DenseLayer layer{Matrix(fan_in, fan_out), Vector(fan_out, 0.0)};
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& w : layer.weight.values()) w = rng.uniform(-limit, limit);
  return layer;
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> sizes, Activation hidden, Activation output)
    : sizes_(std::move(sizes)), hidden_(hidden), output_(output) {
  if (sizes_.size() < 2) throw Error(ErrorCode::kShape, "an MLP needs at least input and output sizes");
  for (std::size_t s : sizes_)
    if (s == 0) throw Error(ErrorCode::kShape, "MLP layer sizes must be >= 1");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l)
    layers_.push_back({Matrix(sizes_[l], sizes_[l + 1]), Vector(sizes_[l + 1], 0.0)});
}

void Mlp::init_glorot(Rng& rng) {
  for (std::size_t l = 0; l < layers_.size(); ++l) layers_[l] = glorot_layer(sizes_[l], sizes_[l + 1], rng);
}

void Mlp::reset_last_layer(std::size_t outputs, Rng& rng) {
  sizes_.back() = outputs;
  layers_.back() = glorot_layer(sizes_[sizes_.size() - 2], outputs, rng);
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) n += (sizes_[l] + 1) * sizes_[l + 1];
  return n;
}

Activation Mlp::activation_of(std::size_t layer) const {
  return layer + 1 == layers_.size() ? output_ : hidden_;
}

Matrix Mlp::forward(const Matrix& input, Cache* cache) const {
  if (input.cols() != input_dim()) {
    throw Error(ErrorCode::kDimension, "MLP expects width " + std::to_string(input_dim()) + ", got " +
                                           std::to_string(input.cols()));
  }
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(input);
  }
  Matrix x = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z;
    kernels::matmul(x, layers_[l].weight, z);
    const bool relu = activation_of(l) == Activation::kRelu;
    for (std::size_t r = 0; r < z.rows(); ++r) {
      auto row = z.row(r);
      for (std::size_t j = 0; j < row.size(); ++j) {
        row[j] += layers_[l].bias[j];
        if (relu && row[j] < 0.0) row[j] = 0.0;
      }
    }
    if (cache) cache->activations.push_back(z);
    x = std::move(z);
  }
  return x;
}

MlpGradients Mlp::zero_gradients() const {
  MlpGradients g;
  for (const auto& layer : layers_)
    g.layers.push_back({Matrix(layer.weight.rows(), layer.weight.cols()), Vector(layer.bias.size(), 0.0)});
  return g;
}

Matrix Mlp::backward(const Cache& cache, const Matrix& grad_output, MlpGradients& grads,
                     const Matrix* tap_grad, std::size_t tap_layer) const {
  if (cache.activations.size() != layers_.size() + 1)
    throw Error(ErrorCode::kCache, "MLP cache does not match the layer count");
  const std::size_t batch = cache.activations.front().rows();
  if (grad_output.rows() != batch || grad_output.cols() != output_dim())
    throw Error(ErrorCode::kShape, "MLP output gradient has the wrong shape");
  if (tap_grad && (tap_layer >= layers_.size() || tap_grad->rows() != batch ||
                   tap_grad->cols() != sizes_[tap_layer + 1]))
    throw Error(ErrorCode::kShape, "MLP tap gradient has the wrong shape");
  if (grads.layers.size() != layers_.size()) grads = zero_gradients();

  Matrix g = grad_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    if (tap_grad && l == tap_layer)
      for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] += tap_grad->values()[i];
    if (activation_of(l) == Activation::kRelu) {
      const Matrix& out = cache.activations[l + 1];
      for (std::size_t i = 0; i < g.size(); ++i)
        if (out.values()[i] <= 0.0) g.values()[i] = 0.0;
    }
    const Matrix& in = cache.activations[l];
    kernels::matmul_at_b(in, g, grads.layers[l].weight);
    Vector& db = grads.layers[l].bias;
    db.assign(g.cols(), 0.0);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t j = 0; j < g.cols(); ++j) db[j] += g(r, j);
    Matrix g_in;
    kernels::matmul_a_bt(g, layers_[l].weight, g_in);
    g = std::move(g_in);
  }
  return g;
}

void Mlp::append_parameter_blocks(std::vector<std::span<double>>& out) {
  for (auto& layer : layers_) {
    out.push_back(layer.weight.values());
    out.push_back(layer.bias);
  }
}

void append_gradient_blocks(MlpGradients& grads, std::vector<std::span<double>>& out) {
  for (auto& layer : grads.layers) {
    out.push_back(layer.weight.values());
    out.push_back(layer.bias);
  }
}

}  // namespace diccae
