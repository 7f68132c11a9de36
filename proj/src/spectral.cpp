#include "crowd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "crowd/kernels.hpp"
#include "crowd/rng.hpp"

namespace crowd {

namespace {

double norm2(const std::vector<double>& x) {
    double s = 0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

void normalize(std::vector<double>& x) {
    const double nrm = norm2(x);
    if (nrm == 0) throw NumericalError("power iteration hit the zero vector");
    for (double& v : x) v /= nrm;
}

// Deterministic pseudo-random start vector; a fixed interior direction with
// nonzero overlap with any eigenvector, whatever the matrix.
std::vector<double> start_vector(std::size_t d) {
    SplitMix64 rng(derive_seed(0x5eedu, stream::kEigenStart));
    std::vector<double> q(d);
    for (double& v : q) v = rng.uniform(0.2, 1.0);
    normalize(q);
    return q;
}

void orthogonalize_against(std::vector<double>& q,
                           const std::vector<const std::vector<double>*>& basis) {
    for (const auto* b : basis) {
        double proj = 0;
        for (std::size_t i = 0; i < q.size(); ++i) proj += q[i] * (*b)[i];
        for (std::size_t i = 0; i < q.size(); ++i) q[i] -= proj * (*b)[i];
    }
}

void sign_normalize(std::vector<double>& v) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    if (v[arg] < 0)
        for (double& x : v) x = -x;
}

// One deflated power iteration: largest eigenpair of T restricted to the
// orthogonal complement of `deflated`. Deflated rounds may additionally
// accept a stabilized Rayleigh quotient: the bulk eigenvalues of a noisy
// similarity matrix are arbitrarily close, so the runner-up residual can
// stall far above tol while the value itself has long converged, and only
// the value is consumed downstream.
EigenPair power_iterate(const Matrix& T, const std::vector<EigenPair>& deflated,
                        const EigenOptions& opts, bool allow_value_stall) {
    const std::size_t d = T.rows();
    std::size_t max_iter = opts.max_iter;
    if (max_iter == 0)
        max_iter = static_cast<std::size_t>(10.0 * static_cast<double>(d) *
                                            std::log(std::max<double>(2.0, static_cast<double>(d)))) +
                   1000;

    std::vector<const std::vector<double>*> basis;
    basis.reserve(deflated.size());
    for (const auto& e : deflated) basis.push_back(&e.vector);

    std::vector<double> q = start_vector(d);
    orthogonalize_against(q, basis);
    normalize(q);

    std::vector<double> z(d);
    double lambda = 0, residual = std::numeric_limits<double>::infinity();
    double prev_lambda = std::numeric_limits<double>::quiet_NaN();
    std::size_t stable_iters = 0;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        kernels::matvec(T, q, z);
        // Restrict to the complement of already-found eigenvectors.
        orthogonalize_against(z, basis);
        lambda = 0;
        for (std::size_t i = 0; i < d; ++i) lambda += q[i] * z[i];
        double res_sq = 0;
        for (std::size_t i = 0; i < d; ++i) {
            const double r = z[i] - lambda * q[i];
            res_sq += r * r;
        }
        residual = std::sqrt(res_sq);
        if (residual <= opts.tol * std::max(1.0, std::abs(lambda))) {
            EigenPair out{lambda, q};
            sign_normalize(out.vector);
            return out;
        }
        if (allow_value_stall) {
            if (std::abs(lambda - prev_lambda) <= 1e-13 * std::max(1.0, std::abs(lambda)))
                ++stable_iters;
            else
                stable_iters = 0;
            if (stable_iters >= 30) {
                EigenPair out{lambda, q};
                sign_normalize(out.vector);
                return out;
            }
        }
        prev_lambda = lambda;
        q = z;
        normalize(q);
    }
    std::ostringstream msg;
    msg << "power iteration did not converge after " << max_iter
        << " iterations (last eigenvalue " << lambda << ", residual " << residual << ")";
    throw NumericalError(msg.str());
}

void require_symmetric(const Matrix& T) {
    if (T.rows() != T.cols()) throw DataError("matrix must be square");
    for (std::size_t i = 0; i < T.rows(); ++i)
        for (std::size_t j = i + 1; j < T.cols(); ++j)
            if (std::abs(T(i, j) - T(j, i)) > 1e-9)
                throw DataError("matrix must be symmetric");
}

}  // namespace

double SpectralSummary::magnitude_spread() const {
    double s = 0;
    for (double x : v) {
        const double dev = std::abs(x) - mu_hat;
        s += dev * dev;
    }
    return s;
}

TopTwo top_two_eigenpairs(const Matrix& T, const EigenOptions& opts) {
    require_symmetric(T);
    std::vector<EigenPair> found;
    EigenPair first = power_iterate(T, found, opts, false);
    found.push_back(first);
    EigenPair second = power_iterate(T, found, opts, true);
    return TopTwo{first.value, std::move(first.vector), second.value,
                  std::move(second.vector)};
}

std::vector<double> leading_eigenvalues(const Matrix& T, std::size_t count,
                                        const EigenOptions& opts) {
    require_symmetric(T);
    count = std::min(count, T.rows());
    std::vector<EigenPair> found;
    std::vector<double> values;
    for (std::size_t k = 0; k < count; ++k) {
        EigenPair e = power_iterate(T, found, opts, k > 0);
        values.push_back(e.value);
        found.push_back(std::move(e));
    }
    return values;
}

ClusterResult cluster_tasks(const ResponseMatrix& Y, std::uint64_t tie_seed,
                            const EigenOptions& opts) {
    if (Y.workers() < 3 || Y.tasks() < 2)
        throw DataError("clustering needs n >= 3 workers and d >= 2 tasks");
    const std::size_t n = Y.workers(), d = Y.tasks();

    const Matrix T = kernels::task_similarity(Y);
    TopTwo top = top_two_eigenpairs(T, opts);

    ClusterResult out;
    out.summary.lambda1 = top.lambda1;
    out.summary.lambda2 = top.lambda2;
    out.summary.v = std::move(top.v1);

    double mu = 0;
    for (double x : out.summary.v) mu += std::abs(x);
    mu /= static_cast<double>(d);
    out.summary.mu_hat = mu;
    out.summary.detect_stat = detection_statistic(out.summary, n, d);

    double lo = std::abs(out.summary.v[0]), hi = lo;
    for (double x : out.summary.v) {
        lo = std::min(lo, std::abs(x));
        hi = std::max(hi, std::abs(x));
    }

    out.assignment.k.resize(d);
    if (hi - lo <= 1e-12) {
        // No magnitude separation at all; assign uniformly at random.
        out.no_separation = true;
        for (std::size_t j = 0; j < d; ++j)
            out.assignment.k[j] = (mix64(derive_seed(tie_seed, stream::kTies) + j) & 1) ? 1 : 2;
        return out;
    }

    // Tasks above the threshold are one candidate group, below the other.
    // Exact ties are per-task seeded coin flips.
    std::vector<bool> above(d);
    double sum_above = 0, sum_below = 0;
    std::size_t n_above = 0, n_below = 0;
    for (std::size_t j = 0; j < d; ++j) {
        const double mag = std::abs(out.summary.v[j]);
        bool hi_side;
        if (mag > mu)
            hi_side = true;
        else if (mag < mu)
            hi_side = false;
        else
            hi_side = mix64(derive_seed(tie_seed, stream::kTies) + j) & 1;
        above[j] = hi_side;
        if (hi_side) {
            sum_above += mag;
            ++n_above;
        } else {
            sum_below += mag;
            ++n_below;
        }
    }

    // Label the group with larger mean magnitude as type 1. With a real
    // split both groups are nonempty because mu lies strictly between the
    // extreme magnitudes.
    const double mean_above = n_above ? sum_above / static_cast<double>(n_above) : -1.0;
    const double mean_below = n_below ? sum_below / static_cast<double>(n_below) : -1.0;
    const bool above_is_type1 = mean_above >= mean_below;
    for (std::size_t j = 0; j < d; ++j)
        out.assignment.k[j] = above[j] == above_is_type1 ? 1 : 2;
    return out;
}

double detection_statistic(const SpectralSummary& summary, std::size_t n, std::size_t d) {
    if (d < 2) throw DataError("detection statistic needs d >= 2");
    return static_cast<double>(n) * (summary.lambda1 - summary.lambda2) /
           std::log(static_cast<double>(d)) * summary.magnitude_spread();
}

bool should_cluster(const SpectralSummary& summary, std::size_t n, std::size_t d,
                    double a_prime) {
    if (!(a_prime > 0)) throw DataError("A' must be positive");
    if (d < 2) throw DataError("should_cluster needs d >= 2");
    // The eigen-gap of T grows like d, so the plug-in gap is normalized by
    // 2/d to keep both sides of the condition on the log(d)/n scale. The
    // raw gap would make the left side grow linearly in d and fire on
    // single-type data of any size.
    const double delta_hat = 2.0 * (summary.lambda1 - summary.lambda2) / static_cast<double>(d);
    const double lhs = delta_hat * summary.magnitude_spread();
    return lhs >= a_prime * std::log(static_cast<double>(d)) / static_cast<double>(n);
}

std::size_t estimate_num_types(const std::vector<double>& eigenvalues_desc,
                               double dominance_factor) {
    if (eigenvalues_desc.size() < 3)
        throw DataError("type detection needs at least 3 eigenvalues");
    if (!(dominance_factor > 1)) throw DataError("dominance factor must exceed 1");
    for (std::size_t i = 1; i < eigenvalues_desc.size(); ++i)
        if (eigenvalues_desc[i] > eigenvalues_desc[i - 1] + 1e-12)
            throw DataError("eigenvalues must be sorted descending");

    // Median of the bottom half approximates the bulk level even when a few
    // leading values are dominant.
    const std::size_t m = eigenvalues_desc.size();
    std::vector<double> bottom(eigenvalues_desc.begin() + static_cast<std::ptrdiff_t>(m / 2),
                               eigenvalues_desc.end());
    std::sort(bottom.begin(), bottom.end());
    const double median = bottom.size() % 2 == 1
                              ? bottom[bottom.size() / 2]
                              : 0.5 * (bottom[bottom.size() / 2 - 1] + bottom[bottom.size() / 2]);

    std::size_t count = 0;
    for (double v : eigenvalues_desc) {
        if (v > dominance_factor * median)
            ++count;
        else
            break;
    }
    return std::max<std::size_t>(count, 1);
}

SpectralParams spectral_params_from_reliabilities(const ReliabilityVector& r1,
                                                  const ReliabilityVector& r2,
                                                  std::size_t d) {
    if (r1.size() != r2.size()) throw DataError("reliability vectors must have equal length");
    if (d < 1) throw DataError("task count must be positive");

    const double n1 = r1.squared_norm(), n2 = r2.squared_norm();
    const double ip = dot(r1, r2);
    const double dd = static_cast<double>(d);

    SpectralParams p;
    const double disc = std::sqrt((n1 - n2) * (n1 - n2) + 4.0 * ip * ip);
    p.lambda1 = dd / 4.0 * (n1 + n2 + disc);
    p.lambda2 = dd / 4.0 * (n1 + n2 - disc);
    p.delta_main = 2.0 * (p.lambda1 - p.lambda2) / (dd * static_cast<double>(r1.size()));
    p.delta_appendix = 2.0 * (p.lambda1 - p.lambda2) / dd;

    if (ip == 0.0) {
        p.orthogonal = true;
        p.omega = std::numeric_limits<double>::infinity();
        p.gamma = std::numeric_limits<double>::infinity();
        p.e_gap_sq = 2.0 / dd;  // limit of (g-1)^2/(g^2+1) as g -> inf
        return p;
    }
    p.omega = std::abs((n1 - n2) / (2.0 * ip));
    p.gamma = p.omega + std::sqrt(p.omega * p.omega + 1.0);
    const double g = p.gamma;
    p.e_gap_sq = (g - 1.0) * (g - 1.0) / (g * g + 1.0) * 2.0 / dd;
    return p;
}

Matrix expected_similarity(const ReliabilityVector& r1, const ReliabilityVector& r2,
                           const TruthLabels& y, const TypeAssignment& typeOf,
                           bool include_diag_corrections) {
    if (y.size() != typeOf.size()) throw DataError("truth and type lengths differ");
    if (r1.size() != r2.size()) throw DataError("reliability vectors must have equal length");
    const std::size_t d = y.size();
    const double n = static_cast<double>(r1.size());

    // Pairwise inner products between the two type vectors.
    const double rr11 = r1.squared_norm(), rr22 = r2.squared_norm(), rr12 = dot(r1, r2);
    auto block = [&](std::uint8_t a, std::uint8_t b) {
        if (a == 1 && b == 1) return rr11;
        if (a == 2 && b == 2) return rr22;
        return rr12;
    };

    Matrix M(d, d);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t l = 0; l < d; ++l)
            M(j, l) = block(typeOf[j], typeOf[l]) / n * y[j] * y[l];
    if (include_diag_corrections)
        for (std::size_t j = 0; j < d; ++j) M(j, j) = 1.0;  // E[Y_ij^2] = 1
    return M;
}

}  // namespace crowd
