#include "crowd/aggregators.hpp"

#include <algorithm>
#include <cmath>

#include "crowd/kernels.hpp"
#include "crowd/rng.hpp"
#include "crowd/spectral.hpp"

namespace crowd {

namespace {

// Seeded coin for breaking a tie on task j; +1 or -1.
std::int8_t tie_coin(std::uint64_t tie_seed, std::size_t j) {
    return (mix64(derive_seed(tie_seed, stream::kTies) + j) & 1) ? std::int8_t{1}
                                                                 : std::int8_t{-1};
}

AggregationResult weighted_vote(const ResponseMatrix& Y, const std::vector<double>& w,
                                std::uint64_t tie_seed) {
    const std::size_t n = Y.workers(), d = Y.tasks();
    AggregationResult out;
    out.labels.y.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        double score = 0;
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::int8_t e = Y.entry(i, j);
            if (e != 0) any = true;
            score += w[i] * e;
        }
        if (!any) throw DataError("task without any response");
        if (score > 0)
            out.labels.y[j] = 1;
        else if (score < 0)
            out.labels.y[j] = -1;
        else {
            out.labels.y[j] = tie_coin(tie_seed, j);
            ++out.diagnostics.tie_count;
        }
    }
    out.weights = w;
    return out;
}

}  // namespace

double nitzan_paroush_weight(double r) {
    const double c = std::clamp(r, -1.0 + kEpsClip, 1.0 - kEpsClip);
    return std::log((1.0 + c) / (1.0 - c));
}

AggregationResult majority_vote(const ResponseMatrix& Y, std::uint64_t tie_seed) {
    return weighted_vote(Y, std::vector<double>(Y.workers(), 1.0), tie_seed);
}

AggregationResult nitzan_paroush(const ResponseMatrix& Y, const ReliabilityVector& r_hat,
                                 std::uint64_t tie_seed) {
    if (r_hat.size() != Y.workers())
        throw DataError("reliability estimate length must match worker count");
    std::vector<double> w(r_hat.size());
    std::size_t clipped = 0;
    for (std::size_t i = 0; i < r_hat.size(); ++i) {
        if (std::abs(r_hat[i]) > 1.0 - kEpsClip) ++clipped;
        w[i] = nitzan_paroush_weight(r_hat[i]);
    }
    AggregationResult out = weighted_vote(Y, w, tie_seed);
    out.diagnostics.clipped_count = clipped;
    ReliabilityVector clipped_r;
    clipped_r.r.resize(r_hat.size());
    for (std::size_t i = 0; i < r_hat.size(); ++i)
        clipped_r.r[i] = std::clamp(r_hat[i], -1.0 + kEpsClip, 1.0 - kEpsClip);
    out.reliabilities = std::move(clipped_r);
    return out;
}

AggregationResult er_labels(const ResponseMatrix& Y, std::uint64_t tie_seed) {
    if (!Y.dense()) throw DataError("dense matrix required");
    const Matrix T = kernels::task_similarity(Y);
    const TopTwo top = top_two_eigenpairs(T);
    const std::vector<double>& v = top.v1;
    const std::size_t d = Y.tasks();

    const AggregationResult mv = majority_vote(Y, tie_seed);

    // Pick the eigenvector orientation that agrees with majority vote on
    // more tasks.
    std::size_t agree_plus = 0, agree_minus = 0;
    for (std::size_t j = 0; j < d; ++j) {
        if (v[j] == 0) continue;
        if ((v[j] > 0 ? 1 : -1) == mv.labels[j])
            ++agree_plus;
        else
            ++agree_minus;
    }
    const double sign = agree_minus > agree_plus ? -1.0 : 1.0;

    AggregationResult out;
    out.diagnostics.sign_flipped = sign < 0;
    out.labels.y.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double x = sign * v[j];
        if (x > 0)
            out.labels.y[j] = 1;
        else if (x < 0)
            out.labels.y[j] = -1;
        else {
            out.labels.y[j] = tie_coin(tie_seed, j);
            ++out.diagnostics.tie_count;
        }
    }
    return out;
}

TeReliabilities te_reliabilities_from_covariance(const Matrix& C, TeSignAnchor anchor) {
    const std::size_t n = C.rows();
    if (n < 3) throw DataError("triangular estimation needs at least 3 workers");

    TeReliabilities out;
    AggregationDiagnostics& diag = out.diagnostics;

    // Most informative co-worker pair for every worker: the off-diagonal
    // covariance entry of largest magnitude not involving the worker.
    // Ties resolve to the lexicographically smallest pair.
    std::vector<std::size_t> ai(n), bi(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = -1.0;
        for (std::size_t a = 0; a < n; ++a) {
            if (a == i) continue;
            for (std::size_t b = a + 1; b < n; ++b) {
                if (b == i) continue;
                const double mag = std::abs(C(a, b));
                if (mag > best) {
                    best = mag;
                    ai[i] = a;
                    bi[i] = b;
                }
            }
        }
    }

    // Reliability magnitudes from the triangular ratio, zeroed when the
    // pivot covariance is not positive.
    std::vector<double> mag(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double pivot = C(ai[i], bi[i]);
        if (pivot > 0) {
            mag[i] = std::sqrt(std::abs(C(ai[i], i) * C(bi[i], i) / pivot));
        } else {
            ++diag.covariance_guards;
        }
    }

    // Reference worker: largest-magnitude product of connections to its
    // informative pair.
    std::size_t ref = 0;
    double best_conf = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double conf = std::abs(C(ai[i], i) * C(bi[i], i));
        if (conf > best_conf) {
            best_conf = conf;
            ref = i;
        }
    }
    diag.reference_worker = ref;

    // Relative signs against the reference worker.
    std::vector<double> sgn(n, 0.0);
    sgn[ref] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == ref) continue;
        const double c = C(i, ref);
        sgn[i] = c > 0 ? 1.0 : (c < 0 ? -1.0 : 0.0);
    }

    // Global orientation. The reference-anchor convention forces the
    // reference worker positive; the default instead makes the mean
    // estimated reliability nonnegative, the identifiability condition the
    // crowd is assumed to satisfy, which stays stable when the reference
    // pick is noisy.
    if (anchor == TeSignAnchor::kPositiveMean) {
        double mean_signed = 0;
        for (std::size_t i = 0; i < n; ++i) mean_signed += sgn[i] * mag[i];
        if (mean_signed < 0) {
            for (double& s : sgn) s = -s;
            diag.sign_flipped = true;
        }
    }

    out.r_hat.r.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.r_hat.r[i] = sgn[i] * mag[i];
    return out;
}

AggregationResult te_estimate(const ResponseMatrix& Y, std::uint64_t tie_seed,
                              TeSignAnchor anchor) {
    if (!Y.dense()) throw DataError("dense matrix required");
    const std::size_t n = Y.workers();
    if (n < 3) throw DataError("triangular estimation needs at least 3 workers");
    if (Y.tasks() < 1) throw DataError("triangular estimation needs at least 1 task");

    std::vector<std::size_t> all_cols(Y.tasks());
    for (std::size_t j = 0; j < Y.tasks(); ++j) all_cols[j] = j;
    const Matrix C = kernels::worker_covariance(Y, all_cols);

    TeReliabilities te = te_reliabilities_from_covariance(C, anchor);
    AggregationDiagnostics diag = te.diagnostics;

    ReliabilityVector r_hat;
    r_hat.r.resize(n);
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i) {
        double v = te.r_hat[i];
        if (std::abs(v) > 1.0 - kEpsClip) ++diag.clipped_count;
        v = std::clamp(v, -1.0 + kEpsClip, 1.0 - kEpsClip);
        r_hat.r[i] = v;
        if (v != 0.0) all_zero = false;
    }

    if (all_zero) {
        AggregationResult out = majority_vote(Y, tie_seed);
        diag.tie_count = out.diagnostics.tie_count;
        diag.mv_fallback = true;
        out.diagnostics = diag;
        out.reliabilities = std::move(r_hat);
        return out;
    }

    AggregationResult out = nitzan_paroush(Y, r_hat, tie_seed);
    diag.tie_count = out.diagnostics.tie_count;
    diag.clipped_count += out.diagnostics.clipped_count;
    out.diagnostics = diag;
    return out;
}

}  // namespace crowd
