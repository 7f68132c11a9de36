#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crowd/matrix.hpp"
#include "crowd/types.hpp"

namespace crowd {

// Spectral facts about a task-similarity matrix: top two eigenvalues, the
// principal eigenvector, the magnitude-mean threshold and the two-type
// detection statistic derived from them.
struct SpectralSummary {
    double lambda1 = 0;
    double lambda2 = 0;
    std::vector<double> v;   // unit principal eigenvector
    double mu_hat = 0;       // mean of |v_j|
    double detect_stat = 0;  // n (l1 - l2) / log d * sum_j (|v_j| - mu)^2

    // Spread term sum_j (|v_j| - mu_hat)^2.
    double magnitude_spread() const;
};

// Closed-form separability parameters of a two-type reliability pair.
// Three Delta normalizations coexist in the source analysis; all are kept
// under distinct names and data-driven code defaults to the plug-in
// eigenvalue gap of the observed similarity matrix.
struct SpectralParams {
    double omega = 0;           // |(||r1||^2 - ||r2||^2) / (2 r1.r2)|
    double gamma = 1;           // |e1/e2| = omega + sqrt(omega^2 + 1)
    double lambda1 = 0;         // top eigenvalue of the reliability block matrix
    double lambda2 = 0;
    double delta_main = 0;      // 2 (l1 - l2) / (d n)
    double delta_appendix = 0;  // 2 (l1 - l2) / d
    double e_gap_sq = 0;        // (e1 - e2)^2 = (g-1)^2/(g^2+1) * 2/d
    bool orthogonal = false;    // r1.r2 == 0: omega and gamma are infinite
};

struct EigenOptions {
    double tol = 1e-10;
    std::size_t max_iter = 0;  // 0: use 10 d log d + 1000
};

struct EigenPair {
    double value = 0;
    std::vector<double> vector;
};

// Power iteration for the largest algebraic eigenvalue of a PSD symmetric
// matrix, then Hotelling deflation for the runner-up. The returned vector is
// sign-normalized so its largest-magnitude entry is positive. Convergence is
// declared when ||T v - lambda v|| <= tol * max(1, |lambda|); failure throws
// NumericalError with the last residual in the message.
struct TopTwo {
    double lambda1 = 0;
    std::vector<double> v1;
    double lambda2 = 0;
    std::vector<double> v2;
};
TopTwo top_two_eigenpairs(const Matrix& T, const EigenOptions& opts = {});

// Leading eigenvalues (descending) by repeated power iteration with
// deflation. Intended for small counts (type detection).
std::vector<double> leading_eigenvalues(const Matrix& T, std::size_t count,
                                        const EigenOptions& opts = {});

struct ClusterResult {
    TypeAssignment assignment;
    SpectralSummary summary;
    bool no_separation = false;  // all |v_j| equal: assignments were random
};

// Task clustering by thresholding the principal eigenvector magnitudes of
// T = (1/n) Y^T Y at their mean. Tasks with |v_j| above the threshold form
// one candidate group, below the other, exact ties are seeded coin flips.
// The group with the larger mean magnitude is labeled type 1.
ClusterResult cluster_tasks(const ResponseMatrix& Y, std::uint64_t tie_seed,
                            const EigenOptions& opts = {});

// n (l1 - l2) / log d * sum_j (|v_j| - mu)^2. Requires d >= 2.
double detection_statistic(const SpectralSummary& summary, std::size_t n, std::size_t d);

// Pre-check for the clustering step:
// (2 (l1 - l2) / d) * sum_j (|v_j| - mu)^2 >= A' log(d) / n,
// i.e. the magnitude spread must clear a noise floor measured against the
// d-normalized plug-in eigen-gap.
bool should_cluster(const SpectralSummary& summary, std::size_t n, std::size_t d,
                    double a_prime);

// Number of dominant eigenvalues: count of leading values exceeding
// dominance_factor times the median of the bottom half of the supplied
// list (a proxy for the bulk of the spectrum that is robust to the
// dominant ones). At least 3 eigenvalues must be supplied; returns >= 1.
std::size_t estimate_num_types(const std::vector<double>& eigenvalues_desc,
                               double dominance_factor);

// Closed-form parameters from a reliability pair; d is the task count the
// eigenvector lives on. r1.r2 == 0 sets the orthogonal flag and infinite
// omega/gamma.
SpectralParams spectral_params_from_reliabilities(const ReliabilityVector& r1,
                                                  const ReliabilityVector& r2,
                                                  std::size_t d);

// Expected task-similarity matrix built analytically from the model:
// M_jl = (1/n) (r_{k_j} . r_{k_l}) y_j y_l, and with corrections enabled the
// diagonal is replaced by its exact expectation, 1. Without corrections the
// matrix is the pure rank-2 block term whose spectrum has the closed form.
Matrix expected_similarity(const ReliabilityVector& r1, const ReliabilityVector& r2,
                           const TruthLabels& y, const TypeAssignment& typeOf,
                           bool include_diag_corrections);

}  // namespace crowd
