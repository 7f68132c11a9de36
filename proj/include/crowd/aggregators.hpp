#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crowd/matrix.hpp"
#include "crowd/types.hpp"

namespace crowd {

// Reliabilities are clipped into [-1 + kEpsClip, 1 - kEpsClip] before
// forming log-odds weights, which bounds a single weight near +-14.5.
inline constexpr double kEpsClip = 1e-6;

// Log-odds weight of one reliability value (after clipping).
double nitzan_paroush_weight(double r);

struct AggregationDiagnostics {
    std::size_t tie_count = 0;            // tasks decided by a seeded coin
    std::size_t clipped_count = 0;        // reliabilities clipped to the interior
    std::size_t covariance_guards = 0;    // TE pairs with non-positive pivot covariance
    std::optional<std::size_t> reference_worker;  // TE sign anchor
    bool sign_flipped = false;            // ER/TE global orientation was flipped
    bool mv_fallback = false;             // TE degenerated to majority vote
};

struct AggregationResult {
    TruthLabels labels;
    std::optional<ReliabilityVector> reliabilities;
    std::optional<std::vector<double>> weights;
    AggregationDiagnostics diagnostics;
};

// Unweighted majority vote; ties are per-task seeded coin flips. Accepts
// matrices with missing entries (zeros simply do not vote), but every task
// must have at least one response.
AggregationResult majority_vote(const ResponseMatrix& Y, std::uint64_t tie_seed);

// Weighted majority vote with log-odds weights from the given reliability
// estimate. Out-of-interior reliabilities are clipped (recorded, not an
// error). With a uniform positive estimate this reduces exactly to
// majority_vote under the same tie seed.
AggregationResult nitzan_paroush(const ResponseMatrix& Y, const ReliabilityVector& r_hat,
                                 std::uint64_t tie_seed);

// Labels from the sign of the principal eigenvector of T = (1/n) Y^T Y.
// The eigenvector sign is not identifiable; the orientation agreeing with
// the plain majority vote on more tasks is chosen. Zero entries fall back
// to seeded flips.
AggregationResult er_labels(const ResponseMatrix& Y, std::uint64_t tie_seed = 0);

// Global sign convention for triangular estimation.
enum class TeSignAnchor {
    // Orientation chosen so the mean estimated reliability is nonnegative,
    // matching the identifiability assumption on the crowd.
    kPositiveMean,
    // The reference worker's estimate is forced positive.
    kReferencePlusOne,
};

// Triangular estimation: reliability magnitudes from three-way covariance
// ratios, relative signs from covariance with the highest-confidence
// reference worker, then Nitzan-Paroush voting with the estimate. A fully
// degenerate estimate (all zeros) falls back to majority vote.
AggregationResult te_estimate(const ResponseMatrix& Y, std::uint64_t tie_seed = 0,
                              TeSignAnchor anchor = TeSignAnchor::kPositiveMean);

// The covariance half of triangular estimation, exposed so the population
// identity r_a r_b = C_ab can be checked directly on an exact matrix.
// Unclipped: entries may exceed 1 in magnitude on noisy input.
struct TeReliabilities {
    ReliabilityVector r_hat;
    AggregationDiagnostics diagnostics;
};
TeReliabilities te_reliabilities_from_covariance(const Matrix& C, TeSignAnchor anchor);

}  // namespace crowd
