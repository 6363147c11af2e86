#include "diccae/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "diccae/errors.hpp"
#include "diccae/kernels.hpp"

namespace diccae {
namespace {

constexpr double kJacobiTolerance = 1e-10;
constexpr std::size_t kJacobiMaxSweeps = 100;

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

Vector column_means(const Matrix& points) {
  Vector mean(points.cols(), 0.0);
  for (std::size_t r = 0; r < points.rows(); ++r)
    for (std::size_t c = 0; c < points.cols(); ++c) mean[c] += points(r, c);
  for (double& m : mean) m /= static_cast<double>(points.rows());
  return mean;
}

}  // namespace

Matrix covariance(const Matrix& points) {
  const std::size_t n = points.rows();
  if (n < 2) {
    throw Error(ErrorCode::kInsufficientData,
                "covariance needs at least 2 points, got " + std::to_string(n));
  }
  const std::size_t d = points.cols();
  const Vector mean = column_means(points);
  Matrix centered(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) centered(r, c) = points(r, c) - mean[c];
  Matrix cov(d, d);
  kernels::matmul_at_b(centered, centered, cov);
  const double scale = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      // Average the two triangles so the result is exactly symmetric.
      const double v = 0.5 * (cov(i, j) + cov(j, i)) * scale;
      cov(i, j) = v;
      cov(j, i) = v;
    }
  }
  return cov;
}

SymmetricEigen symmetric_eigen(const Matrix& symmetric) {
  const std::size_t n = symmetric.rows();
  if (symmetric.cols() != n) throw Error(ErrorCode::kDimension, "eigen: matrix not square");
  Matrix a = symmetric;
  Matrix v = Matrix::identity(n);
  std::size_t sweeps = 0;

  while (sweeps < kJacobiMaxSweeps && off_diagonal_norm(a) >= kJacobiTolerance) {
    ++sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = a(p, r) = c * arp - s * arq;
          a(r, q) = a(q, r) = s * arp + c * arq;
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  SymmetricEigen out;
  out.sweeps = sweeps;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.eigenvalues[j] = a(src, src);
    std::size_t arg = 0;
    for (std::size_t r = 1; r < n; ++r)
      if (std::abs(v(r, src)) > std::abs(v(arg, src))) arg = r;
    const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, j) = sign * v(r, src);
  }
  return out;
}

PrincipalComponents top_principal_components(const Matrix& points, std::size_t k) {
  const std::size_t d = points.cols();
  if (k < 1 || k > d) {
    throw Error(ErrorCode::kDimension, "requested " + std::to_string(k) +
                                           " principal components of " + std::to_string(d) +
                                           "-dimensional data");
  }
  const Matrix cov = covariance(points);
  const SymmetricEigen eig = symmetric_eigen(cov);
  PrincipalComponents pc;
  pc.mean = column_means(points);
  pc.components = Matrix(d, k);
  pc.eigenvalues.assign(eig.eigenvalues.begin(), eig.eigenvalues.begin() + static_cast<std::ptrdiff_t>(k));
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < k; ++c) pc.components(r, c) = eig.eigenvectors(r, c);
  return pc;
}

Matrix PrincipalComponents::project(const Matrix& points) const {
  if (points.cols() != mean.size()) throw Error(ErrorCode::kDimension, "project: dimension mismatch");
  Matrix centered = points;
  for (std::size_t r = 0; r < centered.rows(); ++r)
    for (std::size_t c = 0; c < centered.cols(); ++c) centered(r, c) -= mean[c];
  Matrix out(points.rows(), components.cols());
  kernels::matmul(centered, components, out);
  return out;
}

Matrix PrincipalComponents::reconstruct(const Matrix& projected) const {
  if (projected.cols() != components.cols())
    throw Error(ErrorCode::kDimension, "reconstruct: dimension mismatch");
  Matrix out(projected.rows(), components.rows());
  kernels::matmul_a_bt(projected, components, out);
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += mean[c];
  return out;
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "percentile of an empty list");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  // The slack keeps products like 0.7 * 10 = 7.000000000000001 from rounding up.
  const double rank = std::ceil(p * n - 1e-9) - 1.0;
  const double clamped = std::clamp(rank, 0.0, n - 1.0);
  return sorted[static_cast<std::size_t>(clamped)];
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimension, "distance between vectors of dimension " +
                                           std::to_string(a.size()) + " and " +
                                           std::to_string(b.size()));
  }
  return std::sqrt(kernels::squared_distance(a, b));
}

}  // namespace diccae
