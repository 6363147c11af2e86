#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "diccae/matrix.hpp"

namespace diccae {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;
  std::uint64_t step = 0;
};

// Bias-corrected Adam update over parallel lists of parameter and gradient
// blocks. Moments are allocated on the first call; later calls must pass the
// same block shapes (kShape otherwise).
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<double>> grads, AdamState& state);

}  // namespace diccae
