#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "crowd/rng.hpp"
#include "crowd/theory.hpp"

using namespace crowd;

namespace {

// Independent oracle: dense log-spaced grid over the same t bracket,
// objective written out directly from the definition.
double grid_exponent(const std::vector<double>& w, const std::vector<double>& r,
                     std::size_t points = 200000) {
    const double lo = std::log(1e-6), hi = std::log(1e3);
    double best = 1e300;
    for (std::size_t k = 0; k < points; ++k) {
        const double t =
            std::exp(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1));
        double s = 0;
        for (std::size_t i = 0; i < r.size(); ++i)
            s += std::log(0.5 * std::exp(t * w[i]) * (1 - r[i]) +
                          0.5 * std::exp(-t * w[i]) * (1 + r[i]));
        best = std::min(best, s / static_cast<double>(r.size()));
    }
    return -best;
}

ReliabilityVector rv(std::initializer_list<double> vals) {
    ReliabilityVector r;
    r.r = vals;
    return r;
}

ReliabilityVector random_interior(std::size_t n, SplitMix64& rng, double lo = -0.85,
                                  double hi = 0.9) {
    ReliabilityVector r;
    r.r.resize(n);
    for (auto& v : r.r) v = rng.uniform(lo, hi);
    return r;
}

double interior_margin(const ReliabilityVector& r) {
    double rho = 0.5;
    for (double v : r.r) rho = std::min({rho, (1 + v) / 2, (1 - v) / 2});
    return rho;
}

}  // namespace

TEST_CASE("zero weights give a zero exponent") {
    const auto rep = vote_exponent(std::vector<double>{0, 0, 0}, rv({0.5, 0.2, -0.3}));
    CHECK(rep.value == 0.0);
    CHECK(std::isnan(rep.t_star));
}

TEST_CASE("log-odds weights attain the optimum at t* = 1/2") {
    const ReliabilityVector r = rv({0.8, 0.6, 0.4});
    const auto w = log_odds_weights(r);
    const auto rep = vote_exponent(w, r, 1e-10);
    CHECK(rep.value == doctest::Approx(0.2737152895508631).epsilon(1e-10));
    CHECK(rep.t_star == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(optimal_exponent(r) == doctest::Approx(0.2737152895508631).epsilon(1e-12));
}

TEST_CASE("golden section agrees with a dense grid search") {
    const std::vector<double> w{1.0, 1.0};
    const std::vector<double> rr{0.6, 0.6};
    const double oracle = grid_exponent(w, rr);
    const auto rep = vote_exponent(w, rv({0.6, 0.6}), 1e-10);
    CHECK(rep.value == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("uninformative crowd has zero optimal exponent") {
    CHECK(optimal_exponent(rv({0.0, 0.0, 0.0})) == 0.0);
}

TEST_CASE("optimal exponent rejects boundary reliabilities") {
    CHECK_THROWS_AS(optimal_exponent(rv({1.0, 0.2})), DataError);
    CHECK_THROWS_AS(vote_exponent(std::vector<double>{1, 1}, rv({0.5, -1.0})), DataError);
}

TEST_CASE("exponent equality and domination by the optimum") {
    SplitMix64 rng(17);
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t n = 2 + rng.below(18);
        const ReliabilityVector r = random_interior(n, rng);
        const double Phi = optimal_exponent(r);

        const auto at_ml = vote_exponent(log_odds_weights(r), r, 1e-10);
        CHECK(std::abs(at_ml.value - Phi) <= 1e-8);
        CHECK(at_ml.t_star <= -std::log(interior_margin(r)) + 1e-9);

        std::vector<double> w(n);
        for (auto& v : w) v = rng.uniform(-2, 2);
        const auto at_w = vote_exponent(w, r, 1e-10);
        CHECK(at_w.value <= Phi + 1e-10);
    }
}

TEST_CASE("exponent is invariant to positive weight rescaling") {
    SplitMix64 rng(23);
    const ReliabilityVector r = random_interior(6, rng);
    std::vector<double> w(6);
    for (auto& v : w) v = rng.uniform(0.1, 2.0);
    const double base = vote_exponent(w, r, 1e-10).value;
    for (double c : {0.1, 10.0}) {
        std::vector<double> cw = w;
        for (auto& v : cw) v *= c;
        CHECK(vote_exponent(cw, r, 1e-10).value == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("matched reliabilities collapse the mismatch exponent to the optimum") {
    const ReliabilityVector r = rv({0.7, 0.3, 0.5});
    const auto rep = mismatch_exponent(r, r, 1e-10);
    CHECK(rep.value == doctest::Approx(optimal_exponent(r)).epsilon(1e-8));
}

TEST_CASE("crossed weight patterns are strictly suboptimal") {
    // Heterogeneous vectors whose weight patterns disagree; for uniform
    // vectors the mismatch vanishes by scale invariance, so the strictness
    // needs a real pattern difference.
    const ReliabilityVector r1 = rv({0.8, 0.2});
    const ReliabilityVector r2 = rv({0.2, 0.8});
    const auto rep = mismatch_exponent(r1, r2, 1e-10);
    CHECK(rep.value < optimal_exponent(r2) - 1e-4);

    // Uniform case: log-odds weights of one uniform vector are a positive
    // multiple of the other's, so each direction attains the target optimum.
    const auto uniform = mismatch_exponent(rv({0.8, 0.8}), rv({0.2, 0.2}), 1e-10);
    const double larger =
        std::max(optimal_exponent(rv({0.8, 0.8})), optimal_exponent(rv({0.2, 0.2})));
    CHECK(uniform.value == doctest::Approx(larger).epsilon(1e-8));
}

TEST_CASE("orthogonal sign patterns drive the mismatch exponent to zero") {
    const ReliabilityVector r1 = rv({0.6, -0.6});
    const ReliabilityVector r2 = rv({0.6, 0.6});
    const auto rep = mismatch_exponent(r1, r2, 1e-10);
    const double oracle =
        grid_exponent(log_odds_weights(r1), r2.r);  // infimum at t -> 0+
    CHECK(std::abs(oracle) < 1e-6);
    CHECK(std::abs(rep.value) < 1e-6);
}

TEST_CASE("upper bound: vacuous at zero weights, dominating for real crowds") {
    const ReliabilityVector r = rv({0.6, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6});
    CHECK(vote_error_upper_bound(std::vector<double>(10, 0.0), r, r, 10) == 1.0);

    const auto w = log_odds_weights(r);
    const double bound = vote_error_upper_bound(w, r, r, 10);
    CHECK(exact_vote_error(w, r) <= bound);

    // Monotone nonincreasing in n.
    double prev = 1e300;
    for (std::size_t n : {5, 10, 20, 40}) {
        const double b = vote_error_upper_bound(w, r, r, n);
        CHECK(b <= prev);
        prev = b;
    }
}

TEST_CASE("upper bound dominates the exact two-type mixture error") {
    SplitMix64 rng(31);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 3 + rng.below(10);
        const ReliabilityVector r1 = random_interior(n, rng, -0.5, 0.9);
        const ReliabilityVector r2 = random_interior(n, rng, -0.5, 0.9);
        std::vector<double> w(n);
        for (auto& v : w) v = rng.uniform(0.0, 2.0);
        const double mixture = 0.5 * exact_vote_error(w, r1) + 0.5 * exact_vote_error(w, r2);
        CHECK(mixture <= vote_error_upper_bound(w, r1, r2, n) + 1e-12);
    }
}

TEST_CASE("clustering error bound") {
    const auto insep = clustering_error_bound(1.0, 0.5, 50, 200);
    CHECK(insep.value == 1.0);
    CHECK(insep.inseparable);

    // gamma=2, delta=0.5, n=50, d=200 at the improved constant: the raw
    // value is about 542, far past the cap.
    const auto capped = clustering_error_bound(2.0, 0.5, 50, 200);
    CHECK(capped.value == 1.0);
    CHECK_FALSE(capped.inseparable);

    // Monotone in n, delta (decreasing) and d (increasing) where uncapped.
    const double base = clustering_error_bound(6.0, 2.0, 5000, 200, 1.0).value;
    CHECK(clustering_error_bound(6.0, 2.0, 10000, 200, 1.0).value < base);
    CHECK(clustering_error_bound(6.0, 4.0, 5000, 200, 1.0).value < base);
    CHECK(clustering_error_bound(6.0, 2.0, 5000, 400, 1.0).value > base);
}

TEST_CASE("worker requirement") {
    const auto insep = worker_requirement(1.0, 1.0, 100);
    CHECK(insep.infinite);

    const auto req = worker_requirement(2.0, 1.0, static_cast<std::size_t>(std::exp(2.0) + 0.5));
    CHECK_FALSE(req.infinite);
    CHECK(req.count == 10);

    // Doubling delta halves the requirement (up to ceiling).
    const auto a = worker_requirement(3.0, 1.0, 1000);
    const auto b = worker_requirement(3.0, 2.0, 1000);
    CHECK(b.count <= (a.count + 1) / 2 + 1);

    const auto inf_gamma =
        worker_requirement(std::numeric_limits<double>::infinity(), 1.0, 1000);
    CHECK(inf_gamma.count == static_cast<std::uint64_t>(std::ceil(std::log(1000.0))));
}

TEST_CASE("exact vote error: hand values") {
    CHECK(exact_vote_error(std::vector<double>{1.0}, rv({0.6})) == doctest::Approx(0.2));
    CHECK(exact_vote_error(std::vector<double>{1, 1, 1}, rv({0.6, 0.6, 0.6})) ==
          doctest::Approx(0.104).epsilon(1e-12));
}

TEST_CASE("exact vote error agrees with Monte Carlo") {
    SplitMix64 rng(37);
    const std::size_t n = 7;
    const ReliabilityVector r = random_interior(n, rng, -0.6, 0.9);
    std::vector<double> w(n);
    for (auto& v : w) v = rng.uniform(0.2, 2.0);
    const double exact = exact_vote_error(w, r);

    const std::size_t trials = 1000000;
    double err = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        double margin = 0;
        for (std::size_t i = 0; i < n; ++i)
            margin += rng.bernoulli((1 + r[i]) / 2) ? w[i] : -w[i];
        if (margin < 0)
            err += 1;
        else if (margin == 0)
            err += 0.5;
    }
    err /= static_cast<double>(trials);
    const double se = std::sqrt(exact * (1 - exact) / static_cast<double>(trials));
    CHECK(std::abs(err - exact) <= 3 * se);
}

TEST_CASE("Chernoff validity on random interior crowds") {
    SplitMix64 rng(41);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 3 + rng.below(10);
        const ReliabilityVector r = random_interior(n, rng);
        const auto w_ml = log_odds_weights(r);
        CHECK(exact_vote_error(w_ml, r) <=
              std::exp(-static_cast<double>(n) * vote_exponent(w_ml, r).value) + 1e-12);
        const std::vector<double> w_uniform(n, 1.0);
        CHECK(exact_vote_error(w_uniform, r) <=
              std::exp(-static_cast<double>(n) * vote_exponent(w_uniform, r).value) + 1e-12);
    }
}
