#pragma once

// Data-parallel kernels. Every kernel has a straightforward serial reference
// (kernels::serial) and an OpenMP implementation (kernels::parallel). The
// parallel versions split work by output row only, so their results do not
// depend on the thread count. Tests compare the two; bench/ times them.

#include <cstddef>
#include <span>

#include "diccae/matrix.hpp"

namespace diccae {

enum class Exec { kSerial, kParallel };

namespace kernels {

namespace serial {
// out = a * b
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
// out = a^T * b
void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out);
// out = a * b^T
void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out);
// Nearest centroid by squared Euclidean distance; ties go to the lower id.
void nearest_centroid(const Matrix& points, const Matrix& centroids,
                      std::span<int> assignment, std::span<double> sq_distance);
}  // namespace serial

namespace parallel {
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out);
void nearest_centroid(const Matrix& points, const Matrix& centroids,
                      std::span<int> assignment, std::span<double> sq_distance);
}  // namespace parallel

void matmul(const Matrix& a, const Matrix& b, Matrix& out, Exec exec = Exec::kParallel);
void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out, Exec exec = Exec::kParallel);
void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out, Exec exec = Exec::kParallel);
void nearest_centroid(const Matrix& points, const Matrix& centroids, std::span<int> assignment,
                      std::span<double> sq_distance, Exec exec = Exec::kParallel);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace kernels
}  // namespace diccae
