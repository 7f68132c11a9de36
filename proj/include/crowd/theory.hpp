#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crowd/types.hpp"

namespace crowd {

// Error-exponent calculators for weighted majority votes, the clustering
// error bound and worker-count requirement, and an exact small-crowd vote
// error oracle. Reliabilities must be strictly interior here: |r_i| < 1.

struct ExponentReport {
    double value = 0;   // the exponent itself
    double t_star = 0;  // minimizing t in the caller's weight scale; NaN for w = 0
    std::size_t iterations = 0;
};

// Exponent of the vote sign(sum_i w_i Y_i) on a crowd with reliabilities r:
//   -min_{t>0} (1/n) sum_i log( e^{t w_i}(1-r_i)/2 + e^{-t w_i}(1+r_i)/2 ).
// The minimization runs over log t by golden-section search on the bracket
// [1e-6, 1e3] after scaling w to unit maximum magnitude (the exponent is
// invariant to positive rescaling of w, with t absorbing the scale; the
// reported t_star is mapped back). A minimum pinned at the upper bracket
// edge throws NumericalError; the lower edge is the t -> 0+ infimum and is
// reported as-is.
ExponentReport vote_exponent(std::span<const double> w, const ReliabilityVector& r,
                             double tol = 1e-9);

// Best achievable exponent -(1/2n) sum_i log(1 - r_i^2), attained by the
// log-odds weights. Nonnegative for interior r.
double optimal_exponent(const ReliabilityVector& r);

// Log-odds weight vector of a reliability vector.
std::vector<double> log_odds_weights(const ReliabilityVector& r);

// Exponent of the cross-matched vote: weights tuned for one type applied to
// the other. Returns the larger of the two mismatched directions.
ExponentReport mismatch_exponent(const ReliabilityVector& r1, const ReliabilityVector& r2,
                                 double tol = 1e-9);

// Analytical upper bound exp(-n min_k exponent(w, r_k)) on the vote error
// under the two-type mixture.
double vote_error_upper_bound(std::span<const double> w, const ReliabilityVector& r1,
                              const ReliabilityVector& r2, std::size_t n,
                              double tol = 1e-9);

struct ClusterBound {
    double value = 1;
    bool inseparable = false;  // gamma == 1
};

// min(1, A (g^2+1)/(g-1)^2 log(d) / (n Delta)). Default A is the improved
// constant 2^9 observed in simulation.
ClusterBound clustering_error_bound(double gamma, double delta, std::size_t n,
                                    std::size_t d, double A = 512.0);

struct WorkerRequirement {
    std::uint64_t count = 0;
    bool infinite = false;  // gamma == 1
};

// ceil(C (g^2+1)/(g-1)^2 log(d) / Delta).
WorkerRequirement worker_requirement(double gamma, double delta, std::size_t d,
                                     double C = 1.0);

// Exact error of sign(sum_i w_i G_i) with G_i = +1 with prob (1+r_i)/2, by
// enumeration over all 2^n outcomes; ties count half. Requires n <= 20.
double exact_vote_error(std::span<const double> w, const ReliabilityVector& r);

}  // namespace crowd
