#pragma once

// Dense numeric kernels shared by the linear learners, the MLP selectors and
// k-means.
//
// The functions in `kernels` are OpenMP-parallel. Work is split so that every
// output element is accumulated by one thread in a fixed order (or, for the
// column reduction, over fixed-size row blocks combined serially), which makes
// the result independent of the thread count. `kernels::reference` holds
// plain serial loops used as the test oracle and benchmark baseline.
//
// All matrices are row-major.

#include <cstddef>
#include <span>

namespace shiftsel::kernels {

/// Rows per partial sum in weighted_column_sum.
inline constexpr std::size_t kReductionBlock = 256;

/// C[m x n] = A[m x k] * B[k x n]  (C += ... when accumulate).
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

/// C[m x n] = A[m x k] * B[n x k]^T
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);

/// C[m x n] = A[k x m]^T * B[k x n]
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);

/// out[i] = x_i . w + bias
void affine(std::span<const double> x, std::size_t rows, std::size_t cols,
            std::span<const double> w, double bias, std::span<double> out);

/// out[j] = sum_i coeff[i] * x[i][j]
void weighted_column_sum(std::span<const double> x, std::size_t rows, std::size_t cols,
                         std::span<const double> coeff, std::span<double> out);

/// out[i * k + c] = ||x_i - center_c||^2
void squared_distances(std::span<const double> x, std::size_t rows, std::size_t cols,
                       std::span<const double> centers, std::size_t k, std::span<double> out);

namespace reference {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void affine(std::span<const double> x, std::size_t rows, std::size_t cols,
            std::span<const double> w, double bias, std::span<double> out);
void weighted_column_sum(std::span<const double> x, std::size_t rows, std::size_t cols,
                         std::span<const double> coeff, std::span<double> out);
void squared_distances(std::span<const double> x, std::size_t rows, std::size_t cols,
                       std::span<const double> centers, std::size_t k, std::span<double> out);

}  // namespace reference

/// Threads OpenMP would use for a top-level parallel region.
int max_threads();
void set_threads(int threads);

}  // namespace shiftsel::kernels
