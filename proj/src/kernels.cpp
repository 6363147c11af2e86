#include "diccae/kernels.hpp"

#include <limits>
#include <string>

#include "diccae/errors.hpp"

namespace diccae::kernels {
namespace {

void check_matmul(std::size_t inner_a, std::size_t inner_b, const char* what) {
  if (inner_a != inner_b) {
    throw Error(ErrorCode::kDimension, std::string(what) + ": inner dimensions " +
                                           std::to_string(inner_a) + " and " +
                                           std::to_string(inner_b));
  }
}

void check_assign(const Matrix& points, const Matrix& centroids, std::span<int> assignment,
                  std::span<double> sq_distance) {
  if (points.cols() != centroids.cols())
    throw Error(ErrorCode::kDimension, "nearest_centroid: dimension mismatch");
  if (centroids.rows() == 0) throw Error(ErrorCode::kEmptyInput, "nearest_centroid: no centroids");
  if (assignment.size() != points.rows() || sq_distance.size() != points.rows())
    throw Error(ErrorCode::kShape, "nearest_centroid: output size mismatch");
}

// Row-oriented product shared by the parallel kernels: out row i depends only
// on row i of `a`, accumulated in a fixed k order.
inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  auto dst = out.row(i);
  for (double& v : dst) v = 0.0;
  const std::size_t m = b.cols();
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double aik = a(i, k);
    if (aik == 0.0) continue;
    const double* brow = b.row(k).data();
    for (std::size_t j = 0; j < m; ++j) dst[j] += aik * brow[j];
  }
}

inline void nearest_row(const Matrix& points, const Matrix& centroids, std::size_t i,
                        std::span<int> assignment, std::span<double> sq_distance) {
  const auto p = points.row(i);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double dist = squared_distance(p, centroids.row(c));
    if (dist < best_d) {
      best_d = dist;
      best = static_cast<int>(c);
    }
  }
  assignment[i] = best;
  sq_distance[i] = best_d;
}

}  // namespace

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

namespace serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul(a.cols(), b.rows(), "matmul");
  out = Matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
}

void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul(a.rows(), b.rows(), "matmul_at_b");
  out = Matrix(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, i) * b(k, j);
      out(i, j) = s;
    }
}

void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul(a.cols(), b.cols(), "matmul_a_bt");
  out = Matrix(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
}

void nearest_centroid(const Matrix& points, const Matrix& centroids, std::span<int> assignment,
                      std::span<double> sq_distance) {
  check_assign(points, centroids, assignment, sq_distance);
  for (std::size_t i = 0; i < points.rows(); ++i)
    nearest_row(points, centroids, i, assignment, sq_distance);
}

}  // namespace serial

namespace parallel {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul(a.cols(), b.rows(), "matmul");
  out = Matrix(a.rows(), b.cols());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) matmul_row(a, b, out, static_cast<std::size_t>(i));
}

void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul(a.rows(), b.rows(), "matmul_at_b");
  out = Matrix(a.cols(), b.cols());
  const auto n = static_cast<std::ptrdiff_t>(a.cols());
  const std::size_t inner = a.rows();
  const std::size_t m = b.cols();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto dst = out.row(i);
    for (std::size_t k = 0; k < inner; ++k) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < m; ++j) dst[j] += aki * brow[j];
    }
  }
}

void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul(a.cols(), b.cols(), "matmul_a_bt");
  out = Matrix(a.rows(), b.rows());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto brow = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < arow.size(); ++k) s += arow[k] * brow[k];
      out(i, j) = s;
    }
  }
}

void nearest_centroid(const Matrix& points, const Matrix& centroids, std::span<int> assignment,
                      std::span<double> sq_distance) {
  check_assign(points, centroids, assignment, sq_distance);
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    nearest_row(points, centroids, static_cast<std::size_t>(i), assignment, sq_distance);
}

}  // namespace parallel

void matmul(const Matrix& a, const Matrix& b, Matrix& out, Exec exec) {
  exec == Exec::kSerial ? serial::matmul(a, b, out) : parallel::matmul(a, b, out);
}

void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out, Exec exec) {
  exec == Exec::kSerial ? serial::matmul_at_b(a, b, out) : parallel::matmul_at_b(a, b, out);
}

void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out, Exec exec) {
  exec == Exec::kSerial ? serial::matmul_a_bt(a, b, out) : parallel::matmul_a_bt(a, b, out);
}

void nearest_centroid(const Matrix& points, const Matrix& centroids, std::span<int> assignment,
                      std::span<double> sq_distance, Exec exec) {
  exec == Exec::kSerial ? serial::nearest_centroid(points, centroids, assignment, sq_distance)
                        : parallel::nearest_centroid(points, centroids, assignment, sq_distance);
}

}  // namespace diccae::kernels
