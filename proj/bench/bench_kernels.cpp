// Serial reference vs OpenMP kernels on selector- and learner-shaped inputs.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "shiftsel/kernels.hpp"

namespace {

namespace k = shiftsel::kernels;

std::vector<double> random_matrix(std::size_t size, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(size);
  for (auto& x : v) x = normal(rng);
  return v;
}

// MLP hidden layer: (rows x 128) * (128 x 128).
template <bool Parallel>
void BM_GemmNN(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const std::size_t width = 128;
  const auto a = random_matrix(m * width, 1);
  const auto b = random_matrix(width * width, 2);
  std::vector<double> c(m * width);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::gemm_nn(a, b, c, m, width, width);
    } else {
      k::reference::gemm_nn(a, b, c, m, width, width);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * width * width));
}

// Weight gradient: A^T * delta.
template <bool Parallel>
void BM_GemmTN(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t width = 128;
  const auto a = random_matrix(rows * width, 3);
  const auto b = random_matrix(rows * width, 4);
  std::vector<double> c(width * width);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::gemm_tn(a, b, c, width, rows, width);
    } else {
      k::reference::gemm_tn(a, b, c, width, rows, width);
    }
    benchmark::DoNotOptimize(c.data());
  }
}

// Logistic-loss gradient of a linear learner: rows x (2d).
template <bool Parallel>
void BM_WeightedColumnSum(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 100;
  const auto x = random_matrix(rows * cols, 5);
  const auto coeff = random_matrix(rows, 6);
  std::vector<double> out(cols);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::weighted_column_sum(x, rows, cols, coeff, out);
    } else {
      k::reference::weighted_column_sum(x, rows, cols, coeff, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

// k-means assignment step, k = 2.
template <bool Parallel>
void BM_SquaredDistances(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 100;
  const auto x = random_matrix(rows * cols, 7);
  const auto centers = random_matrix(2 * cols, 8);
  std::vector<double> out(rows * 2);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::squared_distances(x, rows, cols, centers, 2, out);
    } else {
      k::reference::squared_distances(x, rows, cols, centers, 2, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

BENCHMARK(BM_GemmNN<false>)->Name("gemm_nn/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_GemmNN<true>)->Name("gemm_nn/openmp")->Arg(256)->Arg(1024);
BENCHMARK(BM_GemmTN<false>)->Name("gemm_tn/serial")->Arg(1024);
BENCHMARK(BM_GemmTN<true>)->Name("gemm_tn/openmp")->Arg(1024);
BENCHMARK(BM_WeightedColumnSum<false>)->Name("weighted_column_sum/serial")->Arg(2000)->Arg(10000);
BENCHMARK(BM_WeightedColumnSum<true>)->Name("weighted_column_sum/openmp")->Arg(2000)->Arg(10000);
BENCHMARK(BM_SquaredDistances<false>)->Name("squared_distances/serial")->Arg(2000);
BENCHMARK(BM_SquaredDistances<true>)->Name("squared_distances/openmp")->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
