#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crowd/matrix.hpp"
#include "crowd/types.hpp"

namespace crowd::kernels {

// Hot inner loops, each in two variants: a plain serial reference and an
// OpenMP version used by the library. The parallel variants partition work
// over disjoint outputs (or fixed-size blocks combined in index order), so
// they produce bit-identical results to the serial reference for any thread
// count. The units in tests/test_kernels.cpp and the tools/bench_kernels
// target compare the two.

// Task-similarity matrix T = (1/n) Y^T Y for a dense +-1 matrix.
// Entries accumulate in integers, so T is exact and the diagonal is
// exactly 1. Throws DataError when Y has missing entries.
Matrix task_similarity(const ResponseMatrix& Y);
Matrix task_similarity_serial(const ResponseMatrix& Y);

// Worker-covariance matrix C_ab = (1/|J|) sum_{j in J} Y_aj Y_bj over the
// given task columns (all columns when J is empty is not allowed; pass the
// full index list instead). Diagonal entries are computed but unused by TE.
Matrix worker_covariance(const ResponseMatrix& Y, std::span<const std::size_t> task_cols);
Matrix worker_covariance_serial(const ResponseMatrix& Y, std::span<const std::size_t> task_cols);

// out = M x for a square matrix. Each output row is one serial dot product.
void matvec(const Matrix& M, std::span<const double> x, std::span<double> out);
void matvec_serial(const Matrix& M, std::span<const double> x, std::span<double> out);

// Exact error mass of the weighted vote sign(sum_i w_i G_i) where G_i = +1
// with probability (1+r_i)/2, by enumerating all 2^n sign patterns.
// A tie (sum exactly 0) counts half. Patterns are summed in fixed blocks of
// 4096 whose partial sums combine in block order, identically in both
// variants. Requires n <= 20.
double enumerate_error_mass(std::span<const double> w, std::span<const double> r);
double enumerate_error_mass_serial(std::span<const double> w, std::span<const double> r);

}  // namespace crowd::kernels
