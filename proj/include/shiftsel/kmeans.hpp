#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace shiftsel {

struct KMeansConfig {
  int k = 2;
  int restarts = 10;
  int max_iterations = 100;
};

struct KMeansResult {
  std::vector<int> assignment;  // cluster per input row
  std::vector<double> centers;  // k x cols, row-major
  double inertia = 0.0;         // sum of squared distances to assigned centers
  bool converged = false;       // best restart reached a fixed point before the cap
};

/// Lloyd's algorithm with farthest-point seeding. Rows are processed in
/// lexicographic order and the first seed of each restart is drawn from a
/// stream derived from `seed`, so the partition does not depend on the input
/// row order. The restart with the lowest inertia wins (first one on ties).
KMeansResult kmeans(std::span<const double> x, std::size_t rows, std::size_t cols, const KMeansConfig& config,
                    std::uint64_t seed);

}  // namespace shiftsel
