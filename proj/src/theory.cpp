#include "crowd/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "crowd/golden.hpp"
#include "crowd/kernels.hpp"

namespace crowd {

namespace {

void require_interior(const ReliabilityVector& r) {
    for (double v : r.r)
        if (!(std::abs(v) < 1.0))
            throw DataError("reliabilities must be strictly inside (-1, 1)");
}

// log(a e^x + b e^-x) for a, b >= 0, robust against overflow.
double log_mix_exp(double x, double log_a, double log_b) {
    const double u = log_a + x, v = log_b - x;
    const double hi = std::max(u, v);
    return hi + std::log1p(std::exp(std::min(u, v) - hi));
}

constexpr double kBracketLo = 1e-6;
constexpr double kBracketHi = 1e3;

}  // namespace

ExponentReport vote_exponent(std::span<const double> w, const ReliabilityVector& r,
                             double tol) {
    if (w.size() != r.size()) throw DataError("weights and reliabilities must match");
    if (r.size() == 0) throw DataError("empty crowd");
    require_interior(r);
    for (double x : w)
        if (!std::isfinite(x)) throw DataError("weights must be finite");

    double scale = 0;
    for (double x : w) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) {
        // Zero weights: the objective is identically 0.
        return ExponentReport{0.0, std::numeric_limits<double>::quiet_NaN(), 0};
    }

    const double n = static_cast<double>(r.size());
    std::vector<double> log_half_minus(r.size()), log_half_plus(r.size()), wn(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        log_half_minus[i] = std::log(0.5 * (1.0 - r[i]));
        log_half_plus[i] = std::log(0.5 * (1.0 + r[i]));
        wn[i] = w[i] / scale;
    }

    auto objective = [&](double log_t) {
        const double t = std::exp(log_t);
        double s = 0;
        for (std::size_t i = 0; i < r.size(); ++i)
            s += log_mix_exp(t * wn[i], log_half_minus[i], log_half_plus[i]);
        return s / n;
    };

    const GoldenResult g = golden_section_minimize(objective, std::log(kBracketLo),
                                                   std::log(kBracketHi), tol);
    if (g.at_upper_edge) {
        std::ostringstream msg;
        msg << "exponent minimizer escaped the bracket: objective still decreasing at t = "
            << kBracketHi << " (value " << g.value << ")";
        throw NumericalError(msg.str());
    }
    // The lower edge is the t -> 0+ infimum (objective -> 0); report it.
    ExponentReport out;
    out.value = -g.value;
    out.t_star = std::exp(g.argmin) / scale;
    out.iterations = g.iterations;
    return out;
}

double optimal_exponent(const ReliabilityVector& r) {
    if (r.size() == 0) throw DataError("empty crowd");
    require_interior(r);
    double s = 0;
    for (double v : r.r) s += std::log1p(-v * v);
    return -s / (2.0 * static_cast<double>(r.size()));
}

std::vector<double> log_odds_weights(const ReliabilityVector& r) {
    require_interior(r);
    std::vector<double> w(r.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        w[i] = std::log((1.0 + r[i]) / (1.0 - r[i]));
    return w;
}

ExponentReport mismatch_exponent(const ReliabilityVector& r1, const ReliabilityVector& r2,
                                 double tol) {
    if (r1.size() != r2.size()) throw DataError("reliability vectors must match");
    const std::vector<double> w1 = log_odds_weights(r1);
    const std::vector<double> w2 = log_odds_weights(r2);
    const ExponentReport a = vote_exponent(w1, r2, tol);
    const ExponentReport b = vote_exponent(w2, r1, tol);
    return a.value >= b.value ? a : b;
}

double vote_error_upper_bound(std::span<const double> w, const ReliabilityVector& r1,
                              const ReliabilityVector& r2, std::size_t n, double tol) {
    const double e1 = vote_exponent(w, r1, tol).value;
    const double e2 = vote_exponent(w, r2, tol).value;
    return std::exp(-static_cast<double>(n) * std::min(e1, e2));
}

ClusterBound clustering_error_bound(double gamma, double delta, std::size_t n,
                                    std::size_t d, double A) {
    if (!(gamma >= 1.0)) throw DataError("gamma must be >= 1");
    if (!(delta > 0.0)) throw DataError("delta must be positive");
    if (n < 1 || d < 1) throw DataError("n and d must be positive");
    if (!(A > 0.0)) throw DataError("constant A must be positive");
    if (gamma == 1.0) return ClusterBound{1.0, true};
    const double ratio = (gamma * gamma + 1.0) / ((gamma - 1.0) * (gamma - 1.0));
    const double value =
        A * ratio * std::log(static_cast<double>(d)) / (static_cast<double>(n) * delta);
    return ClusterBound{std::min(1.0, value), false};
}

WorkerRequirement worker_requirement(double gamma, double delta, std::size_t d, double C) {
    if (!(gamma >= 1.0)) throw DataError("gamma must be >= 1");
    if (!(delta > 0.0)) throw DataError("delta must be positive");
    if (d < 1) throw DataError("d must be positive");
    if (gamma == 1.0) return WorkerRequirement{0, true};
    const double ratio = std::isinf(gamma)
                             ? 1.0
                             : (gamma * gamma + 1.0) / ((gamma - 1.0) * (gamma - 1.0));
    const double value = C * ratio * std::log(static_cast<double>(d)) / delta;
    return WorkerRequirement{static_cast<std::uint64_t>(std::ceil(value)), false};
}

double exact_vote_error(std::span<const double> w, const ReliabilityVector& r) {
    if (w.size() != r.size()) throw DataError("weights and reliabilities must match");
    r.validate();
    return kernels::enumerate_error_mass(w, r.r);
}

}  // namespace crowd
