#include "crowd/kernels.hpp"

#include <cmath>
#include <cstddef>

namespace crowd::kernels {

namespace {

// Transposed int8 copy of Y so that task columns are contiguous.
std::vector<std::int8_t> transpose_tasks(const ResponseMatrix& Y) {
    const std::size_t n = Y.workers(), d = Y.tasks();
    std::vector<std::int8_t> yt(d * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) yt[j * n + i] = Y.entry(i, j);
    return yt;
}

void require_dense(const ResponseMatrix& Y) {
    if (!Y.dense()) throw DataError("dense matrix required");
}

inline double similarity_entry(const std::int8_t* cj, const std::int8_t* cl,
                               std::size_t n) {
    std::int64_t acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += static_cast<std::int64_t>(cj[i]) * cl[i];
    return static_cast<double>(acc) / static_cast<double>(n);
}

}  // namespace

Matrix task_similarity_serial(const ResponseMatrix& Y) {
    require_dense(Y);
    const std::size_t n = Y.workers(), d = Y.tasks();
    const auto yt = transpose_tasks(Y);
    Matrix T(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t l = j; l < d; ++l) {
            const double t = similarity_entry(&yt[j * n], &yt[l * n], n);
            T(j, l) = t;
            T(l, j) = t;
        }
    }
    return T;
}

Matrix task_similarity(const ResponseMatrix& Y) {
    require_dense(Y);
    const std::size_t n = Y.workers(), d = Y.tasks();
    const auto yt = transpose_tasks(Y);
    Matrix T(d, d);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(d); ++j) {
        for (std::size_t l = static_cast<std::size_t>(j); l < d; ++l) {
            const double t = similarity_entry(&yt[static_cast<std::size_t>(j) * n], &yt[l * n], n);
            T(static_cast<std::size_t>(j), l) = t;
            T(l, static_cast<std::size_t>(j)) = t;
        }
    }
    return T;
}

namespace {

inline double covariance_entry(const std::int8_t* ra, const std::int8_t* rb,
                               std::span<const std::size_t> cols) {
    std::int64_t acc = 0;
    for (std::size_t j : cols) acc += static_cast<std::int64_t>(ra[j]) * rb[j];
    return static_cast<double>(acc) / static_cast<double>(cols.size());
}

}  // namespace

Matrix worker_covariance_serial(const ResponseMatrix& Y, std::span<const std::size_t> task_cols) {
    if (task_cols.empty()) throw DataError("worker covariance needs at least one task");
    const std::size_t n = Y.workers();
    Matrix C(n, n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a; b < n; ++b) {
            const double c = covariance_entry(Y.row(a), Y.row(b), task_cols);
            C(a, b) = c;
            C(b, a) = c;
        }
    }
    return C;
}

Matrix worker_covariance(const ResponseMatrix& Y, std::span<const std::size_t> task_cols) {
    if (task_cols.empty()) throw DataError("worker covariance needs at least one task");
    const std::size_t n = Y.workers();
    Matrix C(n, n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t a = 0; a < static_cast<std::ptrdiff_t>(n); ++a) {
        for (std::size_t b = static_cast<std::size_t>(a); b < n; ++b) {
            const double c = covariance_entry(Y.row(static_cast<std::size_t>(a)), Y.row(b), task_cols);
            C(static_cast<std::size_t>(a), b) = c;
            C(b, static_cast<std::size_t>(a)) = c;
        }
    }
    return C;
}

void matvec_serial(const Matrix& M, std::span<const double> x, std::span<double> out) {
    const std::size_t d = M.rows();
    for (std::size_t i = 0; i < d; ++i) {
        const double* row = M.row(i);
        double s = 0;
        for (std::size_t j = 0; j < d; ++j) s += row[j] * x[j];
        out[i] = s;
    }
}

void matvec(const Matrix& M, std::span<const double> x, std::span<double> out) {
    const std::size_t d = M.rows();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(d); ++i) {
        const double* row = M.row(static_cast<std::size_t>(i));
        double s = 0;
        for (std::size_t j = 0; j < d; ++j) s += row[j] * x[j];
        out[static_cast<std::size_t>(i)] = s;
    }
}

namespace {

constexpr std::uint64_t kEnumBlock = 4096;

// Error mass of one contiguous block of sign patterns [begin, end).
// Bit i of a pattern set means G_i = -1 (worker i wrong).
double enum_block(std::span<const double> w, std::span<const double> r,
                  std::uint64_t begin, std::uint64_t end) {
    const std::size_t n = w.size();
    double mass = 0;
    for (std::uint64_t pattern = begin; pattern < end; ++pattern) {
        double margin = 0, prob = 1;
        for (std::size_t i = 0; i < n; ++i) {
            if (pattern >> i & 1) {
                margin -= w[i];
                prob *= 0.5 * (1.0 - r[i]);
            } else {
                margin += w[i];
                prob *= 0.5 * (1.0 + r[i]);
            }
        }
        if (margin < 0)
            mass += prob;
        else if (margin == 0)
            mass += 0.5 * prob;
    }
    return mass;
}

void check_enum_args(std::span<const double> w, std::span<const double> r) {
    if (w.size() != r.size()) throw DataError("weights and reliabilities must have equal length");
    if (r.empty()) throw DataError("enumeration needs at least one worker");
    if (r.size() > 20) throw NumericalError("exact enumeration limited to n <= 20");
}

}  // namespace

double enumerate_error_mass_serial(std::span<const double> w, std::span<const double> r) {
    check_enum_args(w, r);
    const std::uint64_t total = std::uint64_t{1} << r.size();
    const std::uint64_t nblocks = (total + kEnumBlock - 1) / kEnumBlock;
    double mass = 0;
    for (std::uint64_t blk = 0; blk < nblocks; ++blk) {
        const std::uint64_t begin = blk * kEnumBlock;
        mass += enum_block(w, r, begin, begin + kEnumBlock > total ? total : begin + kEnumBlock);
    }
    return mass;
}

double enumerate_error_mass(std::span<const double> w, std::span<const double> r) {
    check_enum_args(w, r);
    const std::uint64_t total = std::uint64_t{1} << r.size();
    const std::uint64_t nblocks = (total + kEnumBlock - 1) / kEnumBlock;
    std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(nblocks); ++blk) {
        const std::uint64_t begin = static_cast<std::uint64_t>(blk) * kEnumBlock;
        partial[static_cast<std::size_t>(blk)] =
            enum_block(w, r, begin, begin + kEnumBlock > total ? total : begin + kEnumBlock);
    }
    double mass = 0;
    for (double p : partial) mass += p;  // fixed block order
    return mass;
}

}  // namespace crowd::kernels
