#include "shiftsel/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "shiftsel/error.hpp"
#include "shiftsel/kernels.hpp"
#include "shiftsel/rng.hpp"

namespace shiftsel {

namespace {

struct Run {
  std::vector<int> assignment;
  std::vector<double> centers;
  double inertia = 0.0;
  bool converged = false;
};

// Assign each row to its nearest center (lowest index on ties); returns inertia.
double assign(std::span<const double> x, std::size_t rows, std::size_t cols, std::span<const double> centers,
              std::size_t k, std::vector<double>& dist, std::vector<int>& out) {
  dist.resize(rows * k);
  kernels::squared_distances(x, rows, cols, centers, k, dist);
  double inertia = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (dist[i * k + c] < dist[i * k + best]) best = c;
    }
    out[i] = static_cast<int>(best);
    inertia += dist[i * k + best];
  }
  return inertia;
}

Run lloyd(std::span<const double> x, std::size_t rows, std::size_t cols, std::size_t k, std::size_t first,
          int max_iterations) {
  Run run;
  run.centers.assign(k * cols, 0.0);
  std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(first * cols), cols, run.centers.begin());

  // Farthest-point seeding.
  std::vector<double> nearest(rows, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    const auto prev = std::span<const double>(run.centers).subspan((c - 1) * cols, cols);
    std::size_t far = 0;
    for (std::size_t i = 0; i < rows; ++i) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        const double t = x[i * cols + j] - prev[j];
        d2 += t * t;
      }
      nearest[i] = std::min(nearest[i], d2);
      if (nearest[i] > nearest[far]) far = i;
    }
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(far * cols), cols,
                run.centers.begin() + static_cast<std::ptrdiff_t>(c * cols));
  }

  run.assignment.assign(rows, -1);
  std::vector<int> next(rows);
  std::vector<double> dist;
  std::vector<std::size_t> sizes(k);
  for (int it = 0; it < max_iterations; ++it) {
    run.inertia = assign(x, rows, cols, run.centers, k, dist, next);
    if (next == run.assignment) {
      run.converged = true;
      break;
    }
    run.assignment.swap(next);
    std::vector<double> sums(k * cols, 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < rows; ++i) {
      const auto c = static_cast<std::size_t>(run.assignment[i]);
      sizes[c] += 1;
      for (std::size_t j = 0; j < cols; ++j) sums[c * cols + j] += x[i * cols + j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;  // keep an emptied center where it was
      for (std::size_t j = 0; j < cols; ++j) run.centers[c * cols + j] = sums[c * cols + j] / sizes[c];
    }
  }
  if (!run.converged) run.inertia = assign(x, rows, cols, run.centers, k, dist, run.assignment);
  return run;
}

}  // namespace

KMeansResult kmeans(std::span<const double> x, std::size_t rows, std::size_t cols, const KMeansConfig& config,
                    std::uint64_t seed) {
  if (config.k < 1 || config.restarts < 1 || config.max_iterations < 1) {
    throw Error(ErrorKind::kInvalidArgument, "kmeans: k, restarts and max_iterations must be >= 1");
  }
  const auto k = static_cast<std::size_t>(config.k);
  if (rows < k) throw Error(ErrorKind::kDegenerateInput, "kmeans: fewer rows than clusters");
  if (x.size() != rows * cols) throw Error(ErrorKind::kInvalidArgument, "kmeans: matrix size mismatch");

  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return std::lexicographical_compare(x.begin() + l * cols, x.begin() + (l + 1) * cols, x.begin() + r * cols,
                                        x.begin() + (r + 1) * cols);
  });
  std::vector<double> sorted(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(order[i] * cols), cols,
                sorted.begin() + static_cast<std::ptrdiff_t>(i * cols));
  }

  Run best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < config.restarts; ++rep) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
    const auto first = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(rows));
    Run run = lloyd(sorted, rows, cols, k, std::min(first, rows - 1), config.max_iterations);
    if (run.inertia < best.inertia) best = std::move(run);
  }

  KMeansResult out;
  out.assignment.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) out.assignment[order[i]] = best.assignment[i];
  out.centers = std::move(best.centers);
  out.inertia = best.inertia;
  out.converged = best.converged;
  return out;
}

}  // namespace shiftsel
