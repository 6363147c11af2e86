#pragma once

#include <cstddef>
#include <span>

#include "diccae/matrix.hpp"

namespace diccae {

// Sample covariance (divisor n-1) of the rows of `points`. Requires n >= 2.
Matrix covariance(const Matrix& points);

struct SymmetricEigen {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column j pairs with eigenvalues[j]
  std::size_t sweeps = 0;
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Iterates until the
// off-diagonal Frobenius norm drops below 1e-10 or 100 sweeps have run. Each
// eigenvector is signed so that its largest-magnitude entry is positive.
SymmetricEigen symmetric_eigen(const Matrix& symmetric);

struct PrincipalComponents {
  Matrix components;  // d x k, orthonormal columns
  Vector eigenvalues; // k leading eigenvalues, descending
  Vector mean;        // d

  Matrix project(const Matrix& points) const;       // n x k
  Matrix reconstruct(const Matrix& projected) const; // n x d
};

PrincipalComponents top_principal_components(const Matrix& points, std::size_t k);

// Nearest-rank percentile: element ceil(p*n)-1 of the ascending sort, clamped
// into [0, n-1].
double percentile(std::span<const double> values, double p);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

}  // namespace diccae
