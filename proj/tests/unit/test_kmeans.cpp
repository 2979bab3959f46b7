#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "shiftsel/kmeans.hpp"

using namespace shiftsel;

namespace {

// Two well-separated blobs: rows [0, half) near -5, the rest near +5.
std::vector<double> blobs(std::size_t rows, std::size_t cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> x(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) x[i * cols + j] = (i < rows / 2 ? -5.0 : 5.0) + normal(rng);
  }
  return x;
}

}  // namespace

TEST_CASE("separated blobs are recovered") {
  const std::size_t rows = 200, cols = 3;
  const auto x = blobs(rows, cols, 1);
  const auto r = kmeans(x, rows, cols, KMeansConfig{}, 9);
  CHECK(r.converged);
  for (std::size_t i = 1; i < rows / 2; ++i) CHECK(r.assignment[i] == r.assignment[0]);
  for (std::size_t i = rows / 2; i < rows; ++i) CHECK(r.assignment[i] != r.assignment[0]);

  // Inertia equals the independently recomputed sum of squared distances.
  double inertia = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto c = static_cast<std::size_t>(r.assignment[i]);
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = x[i * cols + j] - r.centers[c * cols + j];
      inertia += d * d;
    }
  }
  CHECK(r.inertia == doctest::Approx(inertia).epsilon(1e-10));
}

TEST_CASE("two points form two singleton clusters") {
  const std::vector<double> x{0.0, 0.0, 3.0, 4.0};
  const auto r = kmeans(x, 2, 2, KMeansConfig{}, 1);
  CHECK(r.assignment[0] != r.assignment[1]);
  CHECK(r.inertia == 0.0);
}

TEST_CASE("partition does not depend on row order") {
  const std::size_t rows = 120, cols = 2;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  std::vector<double> x(rows * cols);
  for (auto& v : x) v = normal(rng);  // no clear structure: initialization matters
  const auto base = kmeans(x, rows, cols, KMeansConfig{}, 21);

  std::vector<std::size_t> perm(rows);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> shuffled(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(perm[i] * cols), cols,
                shuffled.begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  const auto moved = kmeans(shuffled, rows, cols, KMeansConfig{}, 21);
  CHECK(moved.inertia == doctest::Approx(base.inertia).epsilon(1e-12));
  // Same partition up to cluster relabelling.
  const bool flipped = moved.assignment[0] != base.assignment[perm[0]];
  for (std::size_t i = 0; i < rows; ++i) {
    CHECK((moved.assignment[i] != base.assignment[perm[i]]) == flipped);
  }
}

TEST_CASE("same seed, same result") {
  const auto x = blobs(80, 4, 2);
  const auto a = kmeans(x, 80, 4, KMeansConfig{}, 5);
  const auto b = kmeans(x, 80, 4, KMeansConfig{}, 5);
  CHECK(a.assignment == b.assignment);
  CHECK(a.centers == b.centers);
}
