#include "shiftsel/kernels.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include <omp.h>

#include "shiftsel/error.hpp"

namespace shiftsel::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = std::size_t{1} << 15;

void check_size(std::span<const double> s, std::size_t need, const char* what) {
  if (s.size() < need) throw Error(ErrorKind::kInvalidArgument, std::string("kernel operand too small: ") + what);
}

// Eight independent partial sums let the compiler vectorize the dot product
// without reassociating across calls.
inline double dot(const double* x, const double* w, std::size_t n) {
  std::array<double, 8> acc{};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    for (std::size_t l = 0; l < 8; ++l) acc[l] += x[j + l] * w[j + l];
  }
  double tail = 0.0;
  for (; j < n; ++j) tail += x[j] * w[j];
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail;
}

}  // namespace

namespace {

constexpr std::size_t kTileRows = 4;
constexpr std::size_t kTileCols = 16;

// C[i0:i0+4, :] (+)= sum_p a(r, p) * B[p, :], with a 4 x 16 register tile per
// column panel. Every C element is accumulated over p in increasing order.
template <class ALoad>
void row_block(ALoad a_at, const double* B, double* C, std::size_t i0, std::size_t rows, std::size_t k,
               std::size_t n, bool accumulate) {
  if (rows == kTileRows) {
    std::size_t j0 = 0;
    for (; j0 + kTileCols <= n; j0 += kTileCols) {
      double acc[kTileRows][kTileCols];
      for (std::size_t r = 0; r < kTileRows; ++r) {
        for (std::size_t l = 0; l < kTileCols; ++l) acc[r][l] = accumulate ? C[(i0 + r) * n + j0 + l] : 0.0;
      }
      for (std::size_t p = 0; p < k; ++p) {
        const double* brow = B + p * n + j0;
        const double a0 = a_at(i0, p), a1 = a_at(i0 + 1, p), a2 = a_at(i0 + 2, p), a3 = a_at(i0 + 3, p);
#pragma omp simd
        for (std::size_t l = 0; l < kTileCols; ++l) {
          const double bl = brow[l];
          acc[0][l] += a0 * bl;
          acc[1][l] += a1 * bl;
          acc[2][l] += a2 * bl;
          acc[3][l] += a3 * bl;
        }
      }
      for (std::size_t r = 0; r < kTileRows; ++r) {
        for (std::size_t l = 0; l < kTileCols; ++l) C[(i0 + r) * n + j0 + l] = acc[r][l];
      }
    }
    if (j0 == n) return;
    for (std::size_t r = 0; r < kTileRows; ++r) {
      double* crow = C + (i0 + r) * n;
      if (!accumulate) std::fill(crow + j0, crow + n, 0.0);
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = a_at(i0 + r, p);
        const double* brow = B + p * n;
        for (std::size_t j = j0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
    return;
  }
  for (std::size_t i = i0; i < i0 + rows; ++i) {
    double* crow = C + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a_at(i, p);
      const double* brow = B + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

}  // namespace

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  check_size(a, m * k, "gemm_nn A");
  check_size(b, k * n, "gemm_nn B");
  check_size(c, m * n, "gemm_nn C");
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
  const auto a_at = [A, k](std::size_t i, std::size_t p) { return A[i * k + p]; };
  const auto blocks = static_cast<std::int64_t>((m + kTileRows - 1) / kTileRows);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (std::int64_t blk = 0; blk < blocks; ++blk) {
    const std::size_t i0 = static_cast<std::size_t>(blk) * kTileRows;
    row_block(a_at, B, C, i0, std::min(kTileRows, m - i0), k, n, accumulate);
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  check_size(b, n * k, "gemm_nt B");
  std::vector<double> bt(k * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  }
  gemm_nn(a, bt, c, m, k, n, false);
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  check_size(a, k * m, "gemm_tn A");
  check_size(b, k * n, "gemm_tn B");
  check_size(c, m * n, "gemm_tn C");
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
  const auto a_at = [A, m](std::size_t i, std::size_t p) { return A[p * m + i]; };
  const auto blocks = static_cast<std::int64_t>((m + kTileRows - 1) / kTileRows);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (std::int64_t blk = 0; blk < blocks; ++blk) {
    const std::size_t i0 = static_cast<std::size_t>(blk) * kTileRows;
    row_block(a_at, B, C, i0, std::min(kTileRows, m - i0), k, n, false);
  }
}

void affine(std::span<const double> x, std::size_t rows, std::size_t cols,
            std::span<const double> w, double bias, std::span<double> out) {
  check_size(x, rows * cols, "affine x");
  check_size(w, cols, "affine w");
  check_size(out, rows, "affine out");
  const double* X = x.data();
  const double* W = w.data();
  double* O = out.data();
  const auto r = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols > kParallelWork)
  for (std::int64_t i = 0; i < r; ++i) {
    O[i] = dot(X + static_cast<std::size_t>(i) * cols, W, cols) + bias;
  }
}

void weighted_column_sum(std::span<const double> x, std::size_t rows, std::size_t cols,
                         std::span<const double> coeff, std::span<double> out) {
  check_size(x, rows * cols, "weighted_column_sum x");
  check_size(coeff, rows, "weighted_column_sum coeff");
  check_size(out, cols, "weighted_column_sum out");
  const std::size_t nblocks = (rows + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(nblocks * cols, 0.0);
  const double* X = x.data();
  const double* Cf = coeff.data();
  const auto nb = static_cast<std::int64_t>(nblocks);
#pragma omp parallel for schedule(static) if (rows * cols > kParallelWork)
  for (std::int64_t blk = 0; blk < nb; ++blk) {
    double* acc = partial.data() + static_cast<std::size_t>(blk) * cols;
    const std::size_t begin = static_cast<std::size_t>(blk) * kReductionBlock;
    const std::size_t end = std::min(rows, begin + kReductionBlock);
    for (std::size_t i = begin; i < end; ++i) {
      const double ci = Cf[i];
      const double* xi = X + i * cols;
#pragma omp simd
      for (std::size_t j = 0; j < cols; ++j) acc[j] += ci * xi[j];
    }
  }
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(cols), 0.0);
  for (std::size_t blk = 0; blk < nblocks; ++blk) {
    const double* acc = partial.data() + blk * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += acc[j];
  }
}

void squared_distances(std::span<const double> x, std::size_t rows, std::size_t cols,
                       std::span<const double> centers, std::size_t k, std::span<double> out) {
  check_size(x, rows * cols, "squared_distances x");
  check_size(centers, k * cols, "squared_distances centers");
  check_size(out, rows * k, "squared_distances out");
  const double* X = x.data();
  const double* Cn = centers.data();
  double* O = out.data();
  const auto r = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols * k > kParallelWork)
  for (std::int64_t i = 0; i < r; ++i) {
    const double* xi = X + static_cast<std::size_t>(i) * cols;
    for (std::size_t c = 0; c < k; ++c) {
      const double* cc = Cn + c * cols;
      double s = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        const double diff = xi[j] - cc[j];
        s += diff * diff;
      }
      O[static_cast<std::size_t>(i) * k + c] = s;
    }
  }
}

int max_threads() { return omp_get_max_threads(); }

void set_threads(int threads) { omp_set_num_threads(std::max(1, threads)); }

namespace reference {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = accumulate ? c[i * n + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
      c[i * n + j] = s;
    }
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[p * m + i] * b[p * n + j];
      c[i * n + j] = s;
    }
  }
}

void affine(std::span<const double> x, std::size_t rows, std::size_t cols,
            std::span<const double> w, double bias, std::span<double> out) {
  for (std::size_t i = 0; i < rows; ++i) {
    double s = bias;
    for (std::size_t j = 0; j < cols; ++j) s += x[i * cols + j] * w[j];
    out[i] = s;
  }
}

void weighted_column_sum(std::span<const double> x, std::size_t rows, std::size_t cols,
                         std::span<const double> coeff, std::span<double> out) {
  for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[j] += coeff[i] * x[i * cols + j];
  }
}

void squared_distances(std::span<const double> x, std::size_t rows, std::size_t cols,
                       std::span<const double> centers, std::size_t k, std::span<double> out) {
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        const double diff = x[i * cols + j] - centers[c * cols + j];
        s += diff * diff;
      }
      out[i * k + c] = s;
    }
  }
}

}  // namespace reference

}  // namespace shiftsel::kernels
