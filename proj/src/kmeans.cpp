#include "diccae/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "diccae/errors.hpp"

namespace diccae {
namespace {

Matrix seed_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  Matrix centroids(k, points.cols());
  Vector nearest(n, std::numeric_limits<double>::infinity());
  std::size_t chosen = static_cast<std::size_t>(rng.uniform_index(n));
  for (std::size_t c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (double v : nearest) total += v;
      if (total <= 0.0) {
        chosen = static_cast<std::size_t>(rng.uniform_index(n));
      } else {
        const double target = rng.uniform() * total;
        double acc = 0.0;
        chosen = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          acc += nearest[i];
          if (acc > target && nearest[i] > 0.0) {
            chosen = i;
            break;
          }
        }
      }
    }
    std::copy(points.row(chosen).begin(), points.row(chosen).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i)
      nearest[i] = std::min(nearest[i], kernels::squared_distance(points.row(i), centroids.row(c)));
  }
  return centroids;
}

void update_centroids(const Matrix& points, std::span<const int> assignment,
                      std::span<double> sq_distance, Matrix& centroids) {
  const std::size_t k = centroids.rows();
  std::vector<std::size_t> counts(k, 0);
  centroids.fill(0.0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto c = static_cast<std::size_t>(assignment[i]);
    ++counts[c];
    auto dst = centroids.row(c);
    const auto src = points.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) {
      // Empty cluster: move it onto the point currently farthest from its centroid.
      std::size_t far = 0;
      for (std::size_t i = 1; i < sq_distance.size(); ++i)
        if (sq_distance[i] > sq_distance[far]) far = i;
      std::copy(points.row(far).begin(), points.row(far).end(), centroids.row(c).begin());
      sq_distance[far] = 0.0;
      continue;
    }
    for (double& v : centroids.row(c)) v /= static_cast<double>(counts[c]);
  }
}

double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

void check_kmeans_input(const Matrix& points, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::kConfig, "k-means needs k >= 1");
  if (points.rows() < k) {
    throw Error(ErrorCode::kInsufficientPoints, "k-means with k=" + std::to_string(k) + " on " +
                                                    std::to_string(points.rows()) + " points");
  }
}

}  // namespace

KMeansResult kmeans_single(const Matrix& points, std::size_t k, Rng& rng, std::size_t max_iters,
                           Exec exec) {
  check_kmeans_input(points, k);
  if (max_iters < 1) throw Error(ErrorCode::kConfig, "k-means needs max_iters >= 1");
  const std::size_t n = points.rows();
  KMeansResult result;
  result.centroids = seed_plus_plus(points, k, rng);
  result.assignments.assign(n, -1);
  std::vector<int> next(n);
  Vector sq(n);
  bool converged = false;
  for (std::size_t iter = 1; iter <= max_iters; ++iter) {
    kernels::nearest_centroid(points, result.centroids, next, sq, exec);
    result.iterations_run = iter;
    result.inertia_trace.push_back(sum(sq));
    const bool changed = next != result.assignments;
    result.assignments = next;
    if (!changed) {
      converged = true;
      break;
    }
    update_centroids(points, result.assignments, sq, result.centroids);
  }
  if (!converged) {
    kernels::nearest_centroid(points, result.centroids, next, sq, exec);
    result.assignments = next;
    result.inertia_trace.push_back(sum(sq));
  }
  result.inertia = sum(sq);
  result.restart_inertias = {result.inertia};
  return result;
}

KMeansResult kmeans(const Matrix& points, std::size_t k, Rng& rng, const KMeansOptions& options) {
  check_kmeans_input(points, k);
  if (options.restarts < 1) throw Error(ErrorCode::kConfig, "k-means needs at least one restart");
  const std::uint64_t base = rng.next_u64();
  std::vector<KMeansResult> fits(options.restarts);
  const Exec inner = options.restarts > 1 ? Exec::kSerial : options.exec;
  const auto restarts = static_cast<std::ptrdiff_t>(options.restarts);
  if (options.exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t r = 0; r < restarts; ++r) {
      Rng sub(base + static_cast<std::uint64_t>(r));
      fits[static_cast<std::size_t>(r)] = kmeans_single(points, k, sub, options.max_iters, inner);
    }
  } else {
    for (std::ptrdiff_t r = 0; r < restarts; ++r) {
      Rng sub(base + static_cast<std::uint64_t>(r));
      fits[static_cast<std::size_t>(r)] = kmeans_single(points, k, sub, options.max_iters, inner);
    }
  }
  std::size_t best = 0;
  std::vector<double> inertias(fits.size());
  for (std::size_t r = 0; r < fits.size(); ++r) {
    inertias[r] = fits[r].inertia;
    if (fits[r].inertia < fits[best].inertia) best = r;
  }
  KMeansResult out = std::move(fits[best]);
  out.restart_index = best;
  out.restart_inertias = std::move(inertias);
  return out;
}

std::vector<int> assign_to_centroids(const Matrix& points, const Matrix& centroids, Exec exec) {
  std::vector<int> assignment(points.rows());
  Vector sq(points.rows());
  kernels::nearest_centroid(points, centroids, assignment, sq, exec);
  return assignment;
}

double inertia(const Matrix& points, const Matrix& centroids, std::span<const int> assignments) {
  if (assignments.size() != points.rows()) throw Error(ErrorCode::kShape, "assignment count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const int c = assignments[i];
    if (c < 0 || static_cast<std::size_t>(c) >= centroids.rows())
      throw Error(ErrorCode::kIndex, "assignment outside centroid range");
    s += kernels::squared_distance(points.row(i), centroids.row(static_cast<std::size_t>(c)));
  }
  return s;
}

bool should_refine(std::size_t epoch, std::size_t period) {
  if (period == 0) throw Error(ErrorCode::kConfig, "refinement period must be >= 1");
  return epoch % period == 0;
}

std::vector<int> match_labels(std::span<const int> labels, std::span<const int> reference,
                              std::size_t k) {
  if (labels.size() != reference.size()) throw Error(ErrorCode::kShape, "label vectors differ in length");
  std::vector<std::vector<long long>> agree(k, std::vector<long long>(k, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int a = labels[i];
    const int b = reference[i];
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= k || static_cast<std::size_t>(b) >= k)
      throw Error(ErrorCode::kIndex, "label outside [0, k) in match_labels");
    ++agree[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  }
  // Hungarian method (potentials form), minimizing -agreement. 1-based internally.
  const std::size_t n = k;
  const long long inf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<long long> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      long long delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const long long cur = -agree[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> mapping(k, 0);
  for (std::size_t j = 1; j <= n; ++j) mapping[p[j] - 1] = static_cast<int>(j - 1);
  return mapping;
}

}  // namespace diccae
