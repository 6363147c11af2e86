#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "diccae/kernels.hpp"
#include "diccae/matrix.hpp"
#include "diccae/rng.hpp"

namespace diccae {

inline constexpr std::size_t kDefaultRestarts = 20;
inline constexpr std::size_t kDefaultMaxIterations = 100;
inline constexpr std::size_t kDefaultRefinePeriod = 10;

struct KMeansResult {
  Matrix centroids;             // k x d
  std::vector<int> assignments; // n, each in [0, k)
  double inertia = 0.0;
  std::size_t iterations_run = 0;
  std::size_t restart_index = 0;
  std::vector<double> restart_inertias;  // final inertia of every restart
  std::vector<double> inertia_trace;     // chosen restart, after each assignment step
};

struct KMeansOptions {
  std::size_t restarts = kDefaultRestarts;
  std::size_t max_iters = kDefaultMaxIterations;
  Exec exec = Exec::kParallel;
};

// Best of `restarts` k-means++-seeded Lloyd fits by inertia. Restart r uses the
// sub-seed base + r where base is drawn once from `rng`.
KMeansResult kmeans(const Matrix& points, std::size_t k, Rng& rng, const KMeansOptions& options = {});

// One Lloyd fit from a k-means++ seeding; exposed for tests.
KMeansResult kmeans_single(const Matrix& points, std::size_t k, Rng& rng, std::size_t max_iters,
                           Exec exec = Exec::kParallel);

std::vector<int> assign_to_centroids(const Matrix& points, const Matrix& centroids,
                                     Exec exec = Exec::kParallel);

double inertia(const Matrix& points, const Matrix& centroids, std::span<const int> assignments);

bool should_refine(std::size_t epoch, std::size_t period = kDefaultRefinePeriod);

// Relabels `labels` (ids in [0, k)) to maximize agreement with `reference`
// using an optimal one-to-one matching (Hungarian method). Returns the mapping
// old id -> new id.
std::vector<int> match_labels(std::span<const int> labels, std::span<const int> reference,
                              std::size_t k);

}  // namespace diccae
