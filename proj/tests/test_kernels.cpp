#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "crowd/kernels.hpp"
#include "crowd/rng.hpp"

using namespace crowd;

namespace {

ResponseMatrix random_dense(std::size_t n, std::size_t d, std::uint64_t seed) {
    ResponseMatrix Y(n, d);
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            Y.entry(i, j) = rng.bernoulli(0.5) ? 1 : -1;
    return Y;
}

std::vector<std::size_t> all_columns(const ResponseMatrix& Y) {
    std::vector<std::size_t> cols(Y.tasks());
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    return cols;
}

}  // namespace

TEST_CASE("task similarity matches hand-multiplied 2x2") {
    // Y = [[+1,-1],[+1,+1]]: columns are orthogonal.
    ResponseMatrix Y(2, 2);
    Y.entry(0, 0) = 1;
    Y.entry(0, 1) = -1;
    Y.entry(1, 0) = 1;
    Y.entry(1, 1) = 1;
    const Matrix T = kernels::task_similarity(Y);
    CHECK(T(0, 0) == 1.0);
    CHECK(T(1, 1) == 1.0);
    CHECK(T(0, 1) == 0.0);
    CHECK(T(1, 0) == 0.0);
}

TEST_CASE("task similarity of a single all-ones worker is all ones") {
    ResponseMatrix Y(1, 3);
    for (std::size_t j = 0; j < 3; ++j) Y.entry(0, j) = 1;
    const Matrix T = kernels::task_similarity(Y);
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t l = 0; l < 3; ++l) CHECK(T(j, l) == 1.0);
}

TEST_CASE("task similarity is symmetric with unit diagonal") {
    const ResponseMatrix Y = random_dense(7, 23, 42);
    const Matrix T = kernels::task_similarity(Y);
    for (std::size_t j = 0; j < 23; ++j) {
        CHECK(T(j, j) == 1.0);
        for (std::size_t l = 0; l < 23; ++l) CHECK(T(j, l) == T(l, j));
    }
}

TEST_CASE("task similarity rejects missing entries") {
    ResponseMatrix Y = random_dense(4, 5, 1);
    Y.entry(2, 3) = 0;
    CHECK_THROWS_AS(kernels::task_similarity(Y), DataError);
}

TEST_CASE("parallel kernels are bit-identical to serial references") {
    const ResponseMatrix Y = random_dense(17, 131, 7);
    CHECK(kernels::task_similarity(Y) == kernels::task_similarity_serial(Y));

    const auto cols = all_columns(Y);
    CHECK(kernels::worker_covariance(Y, cols) == kernels::worker_covariance_serial(Y, cols));

    const Matrix T = kernels::task_similarity(Y);
    std::vector<double> x(T.rows());
    SplitMix64 rng(3);
    for (double& v : x) v = rng.uniform(-1, 1);
    std::vector<double> a(T.rows()), b(T.rows());
    kernels::matvec(T, x, a);
    kernels::matvec_serial(T, x, b);
    CHECK(a == b);

    std::vector<double> w(15), r(15);
    for (double& v : w) v = rng.uniform(0.1, 3.0);
    for (double& v : r) v = rng.uniform(-0.9, 0.9);
    CHECK(kernels::enumerate_error_mass(w, r) == kernels::enumerate_error_mass_serial(w, r));
}

TEST_CASE("worker covariance over a column subset") {
    // Two workers agreeing on the first two tasks, disagreeing on the third.
    ResponseMatrix Y(3, 3);
    const std::int8_t rows[3][3] = {{1, 1, 1}, {1, 1, -1}, {-1, 1, 1}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) Y.entry(i, j) = rows[i][j];
    const std::vector<std::size_t> firstTwo{0, 1};
    const Matrix C = kernels::worker_covariance(Y, firstTwo);
    CHECK(C(0, 1) == 1.0);
    CHECK(C(0, 2) == 0.0);
    const Matrix Call = kernels::worker_covariance(Y, all_columns(Y));
    CHECK(Call(0, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("enumeration handles ties as half errors") {
    // Two equal workers, w = (1, 1), r = 0: outcomes ++, +-, -+, -- with
    // probability 1/4 each; the two mixed outcomes are ties.
    std::vector<double> w{1.0, 1.0}, r{0.0, 0.0};
    CHECK(kernels::enumerate_error_mass(w, r) == doctest::Approx(0.5));
}

TEST_CASE("enumeration size guard") {
    std::vector<double> w(21, 1.0), r(21, 0.1);
    CHECK_THROWS_AS(kernels::enumerate_error_mass(w, r), NumericalError);
}
