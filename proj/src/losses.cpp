#include "diccae/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "diccae/errors.hpp"
#include "diccae/kernels.hpp"

namespace diccae {
namespace {

constexpr double kZeroNorm = 1e-12;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Cosine {
  double value = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  bool degenerate = false;
};

Cosine cosine(std::span<const double> a, std::span<const double> b) {
  Cosine c;
  c.norm_a = norm(a);
  c.norm_b = norm(b);
  if (c.norm_a < kZeroNorm || c.norm_b < kZeroNorm) {
    c.degenerate = true;
    return c;
  }
  c.value = dot(a, b) / (c.norm_a * c.norm_b);
  return c;
}

// Accumulates upstream * d cos / d a and d cos / d b.
void cosine_backward(std::span<const double> a, std::span<const double> b, const Cosine& c,
                     double upstream, std::span<double> grad_a, std::span<double> grad_b) {
  if (c.degenerate || upstream == 0.0) return;
  const double inv_ab = 1.0 / (c.norm_a * c.norm_b);
  const double inv_aa = c.value / (c.norm_a * c.norm_a);
  const double inv_bb = c.value / (c.norm_b * c.norm_b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    grad_a[i] += upstream * (b[i] * inv_ab - a[i] * inv_aa);
    grad_b[i] += upstream * (a[i] * inv_ab - b[i] * inv_bb);
  }
}

void check_temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw Error(ErrorCode::kConfig, "temperature must be positive, got " + std::to_string(t));
}

// Mean of weight[k] * BCE(F_p(a_k, b_k), y_k) with gradients to both sides.
template <typename WeightFn>
LossValue weighted_pair_loss(const PairBatch& batch, double temperature, WeightFn weight_of) {
  batch.validate();
  check_temperature(temperature);
  const std::size_t n = batch.size();
  if (n == 0) throw Error(ErrorCode::kInsufficientBatch, "pair loss on an empty batch");
  LossValue out;
  out.gradients = {Matrix(n, batch.features_a.cols()), Matrix(n, batch.features_b.cols())};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = weight_of(k);
    const auto a = batch.features_a.row(k);
    const auto b = batch.features_b.row(k);
    const Cosine c = cosine(a, b);
    if (c.degenerate) ++out.zero_vector_pairs;
    const double raw = sigmoid(c.value / temperature);
    const double f = std::clamp(raw, kProbabilityClamp, 1.0 - kProbabilityClamp);
    const bool y = batch.same_class[k];
    out.value += w * inv_n * (y ? -std::log(f) : -std::log(1.0 - f));
    if (w == 0.0 || f != raw) continue;
    // d BCE / d z for F = sigmoid(z) is F - y.
    const double dz = (f - (y ? 1.0 : 0.0)) * w * inv_n;
    cosine_backward(a, b, c, dz / temperature, out.gradients[0].row(k), out.gradients[1].row(k));
  }
  return out;
}

}  // namespace

void PairBatch::validate() const {
  const std::size_t n = features_a.rows();
  if (features_b.rows() != n || same_class.size() != n || class_pair.size() != n)
    throw Error(ErrorCode::kShape, "pair batch fields have different lengths");
  if (features_a.cols() != features_b.cols())
    throw Error(ErrorCode::kDimension, "pair batch feature widths differ");
  for (std::size_t k = 0; k < n; ++k)
    if (same_class[k] != (class_pair[k].first == class_pair[k].second))
      throw Error(ErrorCode::kShape, "pair " + std::to_string(k) + ": same_class disagrees with ids");
}

double similarity_fp(std::span<const double> a, std::span<const double> b, double temperature) {
  if (a.size() != b.size()) throw Error(ErrorCode::kDimension, "similarity: dimension mismatch");
  check_temperature(temperature);
  const Cosine c = cosine(a, b);
  return std::clamp(sigmoid(c.value / temperature), kProbabilityClamp, 1.0 - kProbabilityClamp);
}

LossValue confusion_loss(const PairBatch& batch, double temperature) {
  return weighted_pair_loss(batch, temperature, [](std::size_t) { return 1.0; });
}

LossValue diccae_loss(const PairBatch& batch, const Matrix& normalized_confusion, double temperature) {
  const std::size_t c = normalized_confusion.rows();
  if (normalized_confusion.cols() != c) throw Error(ErrorCode::kDimension, "weight matrix must be square");
  for (const auto& [i, j] : batch.class_pair) {
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= c || static_cast<std::size_t>(j) >= c) {
      throw Error(ErrorCode::kIndex, "class pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                         ") outside a " + std::to_string(c) + "-class weight matrix");
    }
  }
  return weighted_pair_loss(batch, temperature, [&](std::size_t k) {
    if (batch.same_class[k]) return kPositivePairWeight;
    const auto [i, j] = batch.class_pair[k];
    return normalized_confusion(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  });
}

LossValue info_nce(const Matrix& anchors, const Matrix& positives, double temperature) {
  check_temperature(temperature);
  const std::size_t b = anchors.rows();
  if (positives.rows() != b || positives.cols() != anchors.cols())
    throw Error(ErrorCode::kDimension, "InfoNCE anchors and positives differ in shape");
  if (b < 2) throw Error(ErrorCode::kInsufficientBatch, "InfoNCE needs a batch of at least 2");
  const std::size_t h = anchors.cols();

  LossValue out;
  Matrix unit_a(b, h);
  Matrix unit_p(b, h);
  Vector norm_a(b);
  Vector norm_p(b);
  for (std::size_t k = 0; k < b; ++k) {
    norm_a[k] = norm(anchors.row(k));
    norm_p[k] = norm(positives.row(k));
    if (norm_a[k] < kZeroNorm || norm_p[k] < kZeroNorm) ++out.zero_vector_pairs;
    for (std::size_t j = 0; j < h; ++j) {
      unit_a(k, j) = norm_a[k] < kZeroNorm ? 0.0 : anchors(k, j) / norm_a[k];
      unit_p(k, j) = norm_p[k] < kZeroNorm ? 0.0 : positives(k, j) / norm_p[k];
    }
  }
  Matrix logits;
  kernels::matmul_a_bt(unit_a, unit_p, logits);

  // d loss / d cosine, row-softmax minus identity, scaled by 1 / (B * tau).
  Matrix d_cos(b, b);
  const double scale = 1.0 / (static_cast<double>(b) * temperature);
  for (std::size_t k = 0; k < b; ++k) {
    auto row = logits.row(k);
    double mx = -std::numeric_limits<double>::infinity();
    for (double& v : row) {
      v /= temperature;
      mx = std::max(mx, v);
    }
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    const double log_z = mx + std::log(sum);
    out.value += (log_z - row[k]) / static_cast<double>(b);
    for (std::size_t m = 0; m < b; ++m)
      d_cos(k, m) = (std::exp(row[m] - log_z) - (m == k ? 1.0 : 0.0)) * scale;
  }

  Matrix g_unit_a;
  Matrix g_unit_p;
  kernels::matmul(d_cos, unit_p, g_unit_a);
  kernels::matmul_at_b(d_cos, unit_a, g_unit_p);

  // Through x / |x|: (g - (g . u) u) / |x|.
  auto through_norm = [h](const Matrix& g_unit, const Matrix& unit, const Vector& norms) {
    Matrix g(unit.rows(), h);
    for (std::size_t k = 0; k < unit.rows(); ++k) {
      if (norms[k] < kZeroNorm) continue;
      const double proj = dot(g_unit.row(k), unit.row(k));
      for (std::size_t j = 0; j < h; ++j) g(k, j) = (g_unit(k, j) - proj * unit(k, j)) / norms[k];
    }
    return g;
  };
  out.gradients = {through_norm(g_unit_a, unit_a, norm_a), through_norm(g_unit_p, unit_p, norm_p)};
  return out;
}

LossValue cross_entropy(const Matrix& logits, std::span<const int> labels) {
  const std::size_t b = logits.rows();
  const std::size_t c = logits.cols();
  if (labels.size() != b) throw Error(ErrorCode::kShape, "cross entropy: label count != batch size");
  if (b == 0) throw Error(ErrorCode::kInsufficientBatch, "cross entropy on an empty batch");
  LossValue out;
  out.gradients = {Matrix(b, c)};
  Matrix& grad = out.gradients[0];
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t k = 0; k < b; ++k) {
    const int label = labels[k];
    if (label < 0 || static_cast<std::size_t>(label) >= c) {
      throw Error(ErrorCode::kLabelRange, "label " + std::to_string(label) + " outside [0, " +
                                              std::to_string(c) + ")");
    }
    const auto row = logits.row(k);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    const double log_z = mx + std::log(sum);
    out.value += (log_z - row[static_cast<std::size_t>(label)]) * inv_b;
    for (std::size_t j = 0; j < c; ++j)
      grad(k, j) = (std::exp(row[j] - log_z) - (j == static_cast<std::size_t>(label) ? 1.0 : 0.0)) * inv_b;
  }
  return out;
}

namespace {

LossValue scaled(const LossValue& v, double coefficient) {
  LossValue out;
  out.value = coefficient * v.value;
  out.zero_vector_pairs = v.zero_vector_pairs;
  out.gradients = v.gradients;
  for (Matrix& g : out.gradients)
    for (double& x : g.values()) x *= coefficient;
  return out;
}

void check_coefficient(double c, const char* name) {
  if (!std::isfinite(c) || c < 0.0)
    throw Error(ErrorCode::kConfig, std::string(name) + " coefficient must be finite and >= 0");
}

}  // namespace

TotalLoss total_loss(const LossComponents& components, const LossCoefficients& coefficients) {
  check_coefficient(coefficients.classification, "classification");
  check_coefficient(coefficients.info_nce, "info_nce");
  check_coefficient(coefficients.diccae, "diccae");
  TotalLoss total;
  total.weighted.classification = scaled(components.classification, coefficients.classification);
  total.weighted.info_nce = scaled(components.info_nce, coefficients.info_nce);
  total.weighted.diccae = scaled(components.diccae, coefficients.diccae);
  total.value = total.weighted.classification.value + total.weighted.info_nce.value +
                total.weighted.diccae.value;
  return total;
}

}  // namespace diccae
