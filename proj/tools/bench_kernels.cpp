// Timing comparison of the serial reference kernels against their OpenMP
// variants. Run with OMP_NUM_THREADS set to taste; results are checked for
// bitwise equality while timing.

#include <chrono>
#include <cstdio>
#include <numeric>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "crowd/kernels.hpp"
#include "crowd/model.hpp"
#include "crowd/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

crowd::ResponseMatrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
    crowd::TwoTypeModel m;
    m.seed = seed;
    crowd::SplitMix64 rng(seed);
    m.r1.r.resize(n);
    m.r2.r.resize(n);
    for (auto& v : m.r1.r) v = rng.uniform(0.2, 0.9);
    for (auto& v : m.r2.r) v = rng.uniform(0.05, 0.5);
    m.y = crowd::sample_truth(d, 0.5, seed);
    m.typeOf.k.resize(d);
    for (std::size_t j = 0; j < d; ++j) m.typeOf.k[j] = j % 2 + 1;
    return crowd::sample_responses(m);
}

template <class F>
double time_best_of(F&& f, int reps) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = Clock::now();
        f();
        best = std::min(best, seconds_since(t0));
    }
    return best;
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-24s serial %8.3f ms   omp %8.3f ms   speedup %5.2fx   %s\n", name,
                serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
                identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif

    {
        const auto Y = random_matrix(64, 600, 7);
        crowd::Matrix a, b;
        const double ts = time_best_of([&] { a = crowd::kernels::task_similarity_serial(Y); }, 3);
        const double tp = time_best_of([&] { b = crowd::kernels::task_similarity(Y); }, 3);
        report("task_similarity 64x600", ts, tp, a == b);
    }
    {
        const auto Y = random_matrix(120, 2500, 8);
        std::vector<std::size_t> cols(Y.tasks());
        std::iota(cols.begin(), cols.end(), std::size_t{0});
        crowd::Matrix a, b;
        const double ts =
            time_best_of([&] { a = crowd::kernels::worker_covariance_serial(Y, cols); }, 3);
        const double tp = time_best_of([&] { b = crowd::kernels::worker_covariance(Y, cols); }, 3);
        report("worker_cov 120x2500", ts, tp, a == b);
    }
    {
        const auto Y = random_matrix(64, 900, 9);
        const crowd::Matrix T = crowd::kernels::task_similarity(Y);
        std::vector<double> x(T.rows(), 1.0), a(T.rows()), b(T.rows());
        const double ts = time_best_of(
            [&] {
                for (int k = 0; k < 20; ++k) crowd::kernels::matvec_serial(T, x, a);
            },
            3);
        const double tp = time_best_of(
            [&] {
                for (int k = 0; k < 20; ++k) crowd::kernels::matvec(T, x, b);
            },
            3);
        report("matvec 900^2 x20", ts, tp, a == b);
    }
    {
        const std::size_t n = 20;
        crowd::SplitMix64 rng(11);
        std::vector<double> w(n), r(n);
        for (auto& v : w) v = rng.uniform(0.1, 2.0);
        for (auto& v : r) v = rng.uniform(-0.8, 0.9);
        double a = 0, b = 0;
        const double ts =
            time_best_of([&] { a = crowd::kernels::enumerate_error_mass_serial(w, r); }, 3);
        const double tp = time_best_of([&] { b = crowd::kernels::enumerate_error_mass(w, r); }, 3);
        report("enumerate 2^20", ts, tp, a == b);
    }
    return 0;
}
