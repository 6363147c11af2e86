#include "diccae/adam.hpp"

#include <cmath>

#include "diccae/errors.hpp"

namespace diccae {

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<double>> grads,
               AdamState& state) {
  if (params.size() != grads.size()) throw Error(ErrorCode::kShape, "Adam: parameter/gradient block count mismatch");
  for (std::size_t b = 0; b < params.size(); ++b)
    if (params[b].size() != grads[b].size()) throw Error(ErrorCode::kShape, "Adam: block size mismatch");

  if (state.first_moment.empty() && state.step == 0) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size())
    throw Error(ErrorCode::kShape, "Adam: state was built for different parameters");
  for (std::size_t b = 0; b < params.size(); ++b)
    if (state.first_moment[b].size() != params[b].size())
      throw Error(ErrorCode::kShape, "Adam: moment shape does not mirror parameter shape");

  ++state.step;
  const AdamOptions& o = state.options;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    auto g = grads[b];
    Vector& m = state.first_moment[b];
    Vector& v = state.second_moment[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

}  // namespace diccae
