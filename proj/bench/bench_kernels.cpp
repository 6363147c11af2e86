// Serial reference kernels against their OpenMP counterparts.
// Run with OMP_NUM_THREADS set to compare thread counts.

#include <benchmark/benchmark.h>

#include <vector>

#include "diccae/confusion.hpp"
#include "diccae/kernels.hpp"
#include "diccae/kmeans.hpp"
#include "diccae/matrix.hpp"
#include "diccae/rng.hpp"

namespace {

using namespace diccae;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

template <Exec E>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  Matrix out(n, n);
  for (auto _ : state) {
    kernels::matmul(a, b, out, E);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <Exec E>
void BM_MatmulAtB(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 3), b = random_matrix(n, n, 4);
  Matrix out(n, n);
  for (auto _ : state) {
    kernels::matmul_at_b(a, b, out, E);
    benchmark::DoNotOptimize(out.values().data());
  }
}

template <Exec E>
void BM_NearestCentroid(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix points = random_matrix(n, 64, 5), centroids = random_matrix(300, 64, 6);
  std::vector<int> assignment(n);
  std::vector<double> dist(n);
  for (auto _ : state) {
    kernels::nearest_centroid(points, centroids, assignment, dist, E);
    benchmark::DoNotOptimize(assignment.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <Exec E>
void BM_KMeans(benchmark::State& state) {
  const Matrix points = random_matrix(static_cast<std::size_t>(state.range(0)), 32, 7);
  KMeansOptions opt;
  opt.restarts = 2;
  opt.max_iters = 20;
  opt.exec = E;
  for (auto _ : state) {
    Rng rng(8);
    benchmark::DoNotOptimize(kmeans(points, 16, rng, opt).inertia);
  }
}

// Confusion building only has the parallel path; kept as a scaling reference.
void BM_ConfusionMatrix(benchmark::State& state) {
  const auto classes = static_cast<std::size_t>(state.range(0));
  const Matrix features = random_matrix(classes * 50, 32, 9);
  std::vector<std::int64_t> labels(features.rows());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::int64_t>(i % classes);
  for (auto _ : state) benchmark::DoNotOptimize(build_confusion_matrix(features, labels).raw.values().data());
}

BENCHMARK(BM_Matmul<Exec::kSerial>)->Name("matmul/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Matmul<Exec::kParallel>)->Name("matmul/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_MatmulAtB<Exec::kSerial>)->Name("matmul_at_b/serial")->Arg(256);
BENCHMARK(BM_MatmulAtB<Exec::kParallel>)->Name("matmul_at_b/parallel")->Arg(256);
BENCHMARK(BM_NearestCentroid<Exec::kSerial>)->Name("nearest_centroid/serial")->Arg(2000)->Arg(20000);
BENCHMARK(BM_NearestCentroid<Exec::kParallel>)->Name("nearest_centroid/parallel")->Arg(2000)->Arg(20000);
BENCHMARK(BM_KMeans<Exec::kSerial>)->Name("kmeans/serial")->Arg(4000);
BENCHMARK(BM_KMeans<Exec::kParallel>)->Name("kmeans/parallel")->Arg(4000);
BENCHMARK(BM_ConfusionMatrix)->Name("confusion_matrix")->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
