#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "diccae/matrix.hpp"
#include "diccae/rng.hpp"

namespace diccae {

enum class Activation { kIdentity, kRelu };

struct DenseLayer {
  Matrix weight;  // fan_in x fan_out
  Vector bias;    // fan_out
};

struct MlpGradients {
  std::vector<DenseLayer> layers;
};

// Fully connected stack. Hidden layers use `hidden`, the last layer `output`.
class Mlp {
 public:
  struct Cache {
    // activations[0] is the input, activations[l + 1] the output of layer l.
    std::vector<Matrix> activations;
  };

  Mlp() = default;
  Mlp(std::vector<std::size_t> sizes, Activation hidden = Activation::kRelu,
      Activation output = Activation::kIdentity);

  // Uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  void init_glorot(Rng& rng);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t parameter_count() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  Activation activation_of(std::size_t layer) const;

  Matrix forward(const Matrix& input, Cache* cache = nullptr) const;

  // Backpropagates `grad_output` (w.r.t. the final output). `tap_grad`, when
  // non-null, is added to the gradient of layer `tap_layer`'s output. Writes
  // parameter gradients into `grads` and returns the gradient w.r.t. input.
  Matrix backward(const Cache& cache, const Matrix& grad_output, MlpGradients& grads,
                  const Matrix* tap_grad = nullptr, std::size_t tap_layer = 0) const;

  MlpGradients zero_gradients() const;

  // Replaces the last layer with a freshly initialized one of `outputs` units.
  void reset_last_layer(std::size_t outputs, Rng& rng);

  void append_parameter_blocks(std::vector<std::span<double>>& out);

 private:
  std::vector<std::size_t> sizes_;
  std::vector<DenseLayer> layers_;
  Activation hidden_ = Activation::kRelu;
  Activation output_ = Activation::kIdentity;
};

void append_gradient_blocks(MlpGradients& grads, std::vector<std::span<double>>& out);

}  // namespace diccae
