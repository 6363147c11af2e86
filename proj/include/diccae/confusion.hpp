#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "diccae/matrix.hpp"
#include "diccae/table.hpp"

namespace diccae {

inline constexpr double kDefaultCoverage = 0.95;
// Centroid distances below this are treated as coincident.
inline constexpr double kCoincidentDistance = 1e-9;
// Confusion degree reported for coincident centroids.
inline constexpr double kConfusionCap = 100.0;

struct ClassGeometry {
  std::int64_t class_id = 0;
  std::array<double, 2> centroid{0.0, 0.0};
  double radius = 0.0;
  std::size_t member_count = 0;
};

struct ConfusionMatrix {
  std::vector<std::int64_t> class_ids;  // ascending
  Matrix raw;                           // symmetric, zero diagonal, >= 0
  Matrix normalized;                    // off-diagonal in [0, 2], zero diagonal
};

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
};

struct ConfusionStats {
  double mean = 0.0;
  double variance = 0.0;  // population variance
  std::size_t count = 0;  // C(C-1)/2 upper-triangle entries
  std::vector<HistogramBin> histogram;
};

Vector class_centroid(const Matrix& features);

// Center is the mean of the points; radius the nearest-rank `coverage`
// percentile of the member distances to it.
ClassGeometry fit_coverage_circle(const Matrix& features2d, double coverage = kDefaultCoverage,
                                  std::int64_t class_id = 0);

// max(0, r_i + r_j - d) / d, or kConfusionCap when d < kCoincidentDistance.
double confusion_degree(double radius_i, double radius_j, double distance);
double confusion_degree(const ClassGeometry& a, const ClassGeometry& b);

// Projects all rows onto one shared 2-component PCA plane, fits a coverage
// circle per class there, and fills the raw matrix. The normalized part is
// filled as well.
ConfusionMatrix build_confusion_matrix(const Matrix& features, std::span<const std::int64_t> labels,
                                       double coverage = kDefaultCoverage);
ConfusionMatrix build_confusion_matrix(const EmbeddingTable& table,
                                       double coverage = kDefaultCoverage);

std::vector<ClassGeometry> fit_class_geometries(const Matrix& features,
                                                std::span<const std::int64_t> labels,
                                                double coverage = kDefaultCoverage);

// Min-max rescale of the off-diagonal entries to [0, 2]. If they are all
// equal the output off-diagonal is all ones. Diagonal is always zero.
Matrix normalize_confusion(const Matrix& raw);

ConfusionStats confusion_stats(const ConfusionMatrix& matrix, std::size_t bins);
ConfusionStats confusion_stats(const Matrix& raw, std::size_t bins);

}  // namespace diccae
