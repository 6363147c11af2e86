#include "diccae/confusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "diccae/errors.hpp"
#include "diccae/linalg.hpp"

namespace diccae {

Vector class_centroid(const Matrix& features) {
  if (features.rows() == 0) throw Error(ErrorCode::kEmptyClass, "centroid of an empty class");
  Vector c(features.cols(), 0.0);
  for (std::size_t r = 0; r < features.rows(); ++r)
    for (std::size_t j = 0; j < features.cols(); ++j) c[j] += features(r, j);
  for (double& v : c) v /= static_cast<double>(features.rows());
  return c;
}

ClassGeometry fit_coverage_circle(const Matrix& features2d, double coverage, std::int64_t class_id) {
  if (features2d.rows() == 0) throw Error(ErrorCode::kEmptyClass, "cannot fit a circle to an empty class");
  if (features2d.cols() != 2) throw Error(ErrorCode::kDimension, "coverage circle needs 2D points");
  const Vector center = class_centroid(features2d);
  Vector distances(features2d.rows());
  for (std::size_t r = 0; r < features2d.rows(); ++r)
    distances[r] = euclidean_distance(features2d.row(r), center);
  ClassGeometry g;
  g.class_id = class_id;
  g.centroid = {center[0], center[1]};
  g.radius = percentile(distances, coverage);
  g.member_count = features2d.rows();
  return g;
}

double confusion_degree(double radius_i, double radius_j, double distance) {
  if (distance < kCoincidentDistance) return kConfusionCap;
  return std::max(0.0, radius_i + radius_j - distance) / distance;
}

double confusion_degree(const ClassGeometry& a, const ClassGeometry& b) {
  return confusion_degree(a.radius, b.radius, euclidean_distance(a.centroid, b.centroid));
}

std::vector<ClassGeometry> fit_class_geometries(const Matrix& features,
                                                std::span<const std::int64_t> labels,
                                                double coverage) {
  if (labels.size() != features.rows())
    throw Error(ErrorCode::kShape, "labels and feature rows disagree");
  std::map<std::int64_t, std::vector<std::size_t>> members;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0)
      throw Error(ErrorCode::kUnlabeled, "confusion analysis needs labeled rows; row " +
                                             std::to_string(r) + " is unlabeled");
    members[labels[r]].push_back(r);
  }
  if (members.size() < 2) {
    throw Error(ErrorCode::kInsufficientClasses,
                "confusion analysis needs at least 2 classes, got " + std::to_string(members.size()));
  }

  // One shared plane for every class so that centroid distances are comparable.
  Matrix plane(features.rows(), 2);
  if (features.cols() >= 2) {
    plane = top_principal_components(features, 2).project(features);
  } else if (features.cols() == 1) {
    const Matrix line = top_principal_components(features, 1).project(features);
    for (std::size_t r = 0; r < line.rows(); ++r) plane(r, 0) = line(r, 0);
  }

  std::vector<ClassGeometry> geometries;
  geometries.reserve(members.size());
  for (const auto& [label, rows] : members)
    geometries.push_back(fit_coverage_circle(plane.select_rows(rows), coverage, label));
  return geometries;
}

ConfusionMatrix build_confusion_matrix(const Matrix& features, std::span<const std::int64_t> labels,
                                       double coverage) {
  const std::vector<ClassGeometry> geometries = fit_class_geometries(features, labels, coverage);
  const std::size_t c = geometries.size();
  ConfusionMatrix cm;
  cm.raw = Matrix(c, c);
  for (const auto& g : geometries) cm.class_ids.push_back(g.class_id);
  const auto rows = static_cast<std::ptrdiff_t>(c);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = i + 1; j < c; ++j) {
      const double m = confusion_degree(geometries[i], geometries[j]);
      cm.raw(i, j) = m;
      cm.raw(j, i) = m;
    }
  }
  cm.normalized = normalize_confusion(cm.raw);
  return cm;
}

ConfusionMatrix build_confusion_matrix(const EmbeddingTable& table, double coverage) {
  table.validate();
  return build_confusion_matrix(table.features, table.labels, coverage);
}

Matrix normalize_confusion(const Matrix& raw) {
  const std::size_t c = raw.rows();
  if (raw.cols() != c) throw Error(ErrorCode::kDimension, "confusion matrix must be square");
  if (c < 2) throw Error(ErrorCode::kInsufficientClasses, "normalization needs at least 2 classes");
  double lo = raw(0, 1);
  double hi = raw(0, 1);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j)
      if (i != j) {
        lo = std::min(lo, raw(i, j));
        hi = std::max(hi, raw(i, j));
      }
  Matrix out(c, c);
  const double range = hi - lo;
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      if (i == j) continue;
      if (range == 0.0) {
        out(i, j) = 1.0;
      } else {
        // Endpoints are pinned so rounding cannot push them off 0 or 2.
        const double v = raw(i, j);
        out(i, j) = v == lo ? 0.0 : v == hi ? 2.0 : std::clamp((v - lo) / range * 2.0, 0.0, 2.0);
      }
    }
  return out;
}

ConfusionStats confusion_stats(const Matrix& raw, std::size_t bins) {
  const std::size_t c = raw.rows();
  if (raw.cols() != c) throw Error(ErrorCode::kDimension, "confusion matrix must be square");
  if (c < 2) throw Error(ErrorCode::kInsufficientClasses, "stats need at least 2 classes");
  if (bins == 0) throw Error(ErrorCode::kConfig, "histogram needs at least one bin");
  Vector values;
  values.reserve(c * (c - 1) / 2);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = i + 1; j < c; ++j) values.push_back(raw(i, j));

  ConfusionStats s;
  s.count = values.size();
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(s.count);
  for (double v : values) s.variance += (v - s.mean) * (v - s.mean);
  s.variance /= static_cast<double>(s.count);

  const double hi = *std::max_element(values.begin(), values.end());
  const double width = hi > 0.0 ? hi / static_cast<double>(bins) : 1.0 / static_cast<double>(bins);
  s.histogram.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    s.histogram[b].lower = width * static_cast<double>(b);
    s.histogram[b].upper = b + 1 == bins && hi > 0.0 ? hi : width * static_cast<double>(b + 1);
  }
  for (double v : values) {
    const auto idx = std::min(bins - 1, static_cast<std::size_t>(std::floor(v / width)));
    ++s.histogram[idx].count;
  }
  return s;
}

ConfusionStats confusion_stats(const ConfusionMatrix& matrix, std::size_t bins) {
  return confusion_stats(matrix.raw, bins);
}

}  // namespace diccae
