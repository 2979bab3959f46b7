#include <random>
#include <vector>

#include "doctest.h"
#include "shiftsel/kernels.hpp"

namespace k = shiftsel::kernels;

namespace {

std::vector<double> random_values(std::size_t size, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(size);
  for (auto& x : v) x = normal(rng);
  return v;
}

// Naive triple loop, independent of both kernel implementations.
std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b, std::size_t m, std::size_t kk,
                           std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0.0L;
      for (std::size_t p = 0; p < kk; ++p) s += static_cast<long double>(a[i * kk + p]) * b[p * n + j];
      c[i * n + j] = static_cast<double>(s);
    }
  }
  return c;
}

std::vector<double> transpose(const std::vector<double>& a, std::size_t rows, std::size_t cols) {
  std::vector<double> t(a.size());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = a[i * cols + j];
  }
  return t;
}

void check_close(const std::vector<double>& got, const std::vector<double>& want) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12).scale(1.0));
}

// Odd shapes exercise the tile tails.
const std::size_t kShapes[][3] = {{1, 1, 1}, {3, 5, 7}, {4, 16, 16}, {37, 13, 29}, {130, 64, 131}};

}  // namespace

TEST_CASE("gemm variants agree with a naive product") {
  for (const auto& shape : kShapes) {
    const std::size_t m = shape[0], kk = shape[1], n = shape[2];
    const auto a = random_values(m * kk, 1);
    const auto b = random_values(kk * n, 2);
    const auto want = matmul(a, b, m, kk, n);

    std::vector<double> c(m * n);
    k::gemm_nn(a, b, c, m, kk, n);
    check_close(c, want);
    k::reference::gemm_nn(a, b, c, m, kk, n);
    check_close(c, want);

    const auto bt = transpose(b, kk, n);
    k::gemm_nt(a, bt, c, m, kk, n);
    check_close(c, want);

    const auto at = transpose(a, m, kk);
    k::gemm_tn(at, b, c, m, kk, n);
    check_close(c, want);

    // Accumulate adds onto existing contents.
    std::vector<double> acc(m * n, 1.0);
    k::gemm_nn(a, b, acc, m, kk, n, true);
    for (std::size_t i = 0; i < acc.size(); ++i) CHECK(acc[i] == doctest::Approx(want[i] + 1.0).epsilon(1e-12));
  }
}

TEST_CASE("vector kernels agree with direct sums") {
  const std::size_t rows = 1000, cols = 7;
  const auto x = random_values(rows * cols, 3);
  const auto w = random_values(cols, 4);
  const auto coeff = random_values(rows, 5);

  std::vector<double> out(rows);
  k::affine(x, rows, cols, w, 0.25, out);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.25;
    for (std::size_t j = 0; j < cols; ++j) s += x[i * cols + j] * w[j];
    CHECK(out[i] == doctest::Approx(s).epsilon(1e-12));
  }

  std::vector<double> col(cols);
  k::weighted_column_sum(x, rows, cols, coeff, col);
  for (std::size_t j = 0; j < cols; ++j) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < rows; ++i) s += static_cast<long double>(coeff[i]) * x[i * cols + j];
    CHECK(col[j] == doctest::Approx(static_cast<double>(s)).epsilon(1e-10));
  }

  const auto centers = random_values(3 * cols, 6);
  std::vector<double> dist(rows * 3);
  k::squared_distances(x, rows, cols, centers, 3, dist);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols; ++j) s += (x[i * cols + j] - centers[c * cols + j]) * (x[i * cols + j] - centers[c * cols + j]);
      CHECK(dist[i * 3 + c] == doctest::Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("parallel kernels are bit-identical across thread counts") {
  const std::size_t m = 301, kk = 67, n = 45, rows = 5000, cols = 20;
  const auto a = random_values(m * kk, 7);
  const auto b = random_values(kk * n, 8);
  const auto x = random_values(rows * cols, 9);
  const auto coeff = random_values(rows, 10);
  const auto centers = random_values(2 * cols, 11);

  auto run = [&](int threads) {
    k::set_threads(threads);
    std::vector<double> out;
    std::vector<double> c(m * n), ct(kk * n), col(cols), dist(rows * 2), aff(rows);
    k::gemm_nn(a, b, c, m, kk, n);
    k::gemm_tn(a, c, ct, kk, m, n);
    k::weighted_column_sum(x, rows, cols, coeff, col);
    k::squared_distances(x, rows, cols, centers, 2, dist);
    k::affine(x, rows, cols, coeff, 0.5, aff);
    for (const auto* v : {&c, &ct, &col, &dist, &aff}) out.insert(out.end(), v->begin(), v->end());
    return out;
  };
  const int before = k::max_threads();
  const auto one = run(1);
  CHECK(run(2) == one);
  CHECK(run(3) == one);
  CHECK(run(8) == one);
  k::set_threads(before);
}

TEST_CASE("parallel weighted column sum matches the serial reference") {
  const std::size_t rows = 3001, cols = 9;
  const auto x = random_values(rows * cols, 12);
  const auto coeff = random_values(rows, 13);
  std::vector<double> par(cols), ref(cols);
  k::weighted_column_sum(x, rows, cols, coeff, par);
  k::reference::weighted_column_sum(x, rows, cols, coeff, ref);
  for (std::size_t j = 0; j < cols; ++j) CHECK(par[j] == doctest::Approx(ref[j]).epsilon(1e-12));
}
