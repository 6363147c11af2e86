#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "diccae/matrix.hpp"

namespace diccae {

inline constexpr double kProbabilityClamp = 1e-7;
inline constexpr double kDefaultConfusionTemperature = 0.5;
inline constexpr double kDefaultInfoNceTemperature = 0.07;
// Weight applied to same-class pairs in the dynamically weighted loss.
inline constexpr double kPositivePairWeight = 1.0;

// Feature pairs with their class ids. same_class[k] is true iff the two ids match.
struct PairBatch {
  Matrix features_a;
  Matrix features_b;
  std::vector<bool> same_class;
  std::vector<std::pair<int, int>> class_pair;

  std::size_t size() const { return features_a.rows(); }
  void validate() const;
};

// Loss value plus gradients with respect to each contributing input, in the
// order documented at each function.
struct LossValue {
  double value = 0.0;
  std::vector<Matrix> gradients;
  std::size_t zero_vector_pairs = 0;  // pairs where a zero vector forced cosine = 0
};

// sigmoid(cos(a, b) / temperature) clamped to [1e-7, 1 - 1e-7]. A zero vector
// gives cosine 0, i.e. 0.5.
double similarity_fp(std::span<const double> a, std::span<const double> b, double temperature);

// Mean pairwise binary cross-entropy on similarity_fp.
// gradients = {d/d features_a, d/d features_b}.
LossValue confusion_loss(const PairBatch& batch, double temperature = kDefaultConfusionTemperature);

// Mean of per-pair confusion loss weighted by normalized_confusion(i, j) for
// cross-class pairs and by kPositivePairWeight for same-class pairs.
// gradients = {d/d features_a, d/d features_b}.
LossValue diccae_loss(const PairBatch& batch, const Matrix& normalized_confusion,
                      double temperature = kDefaultConfusionTemperature);

// Row-wise cosine InfoNCE: row k of `positives` is the positive for anchor k,
// every other row a negative. gradients = {d/d anchors, d/d positives}.
LossValue info_nce(const Matrix& anchors, const Matrix& positives,
                   double temperature = kDefaultInfoNceTemperature);

// Mean softmax cross-entropy. gradients = {d/d logits}.
LossValue cross_entropy(const Matrix& logits, std::span<const int> labels);

struct LossComponents {
  LossValue classification;
  LossValue info_nce;
  LossValue diccae;
};

struct LossCoefficients {
  double classification = 1.0;
  double info_nce = 1.0;
  double diccae = 1.0;

  bool operator==(const LossCoefficients&) const = default;
};

// Weighted sum. `weighted` holds each component with value and gradients
// already multiplied by its coefficient.
struct TotalLoss {
  double value = 0.0;
  LossComponents weighted;
};

TotalLoss total_loss(const LossComponents& components, const LossCoefficients& coefficients);

}  // namespace diccae
