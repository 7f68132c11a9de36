#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace crowd {

// Thrown for malformed or inconsistent input data (CLI exit code 2).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown when an iterative numerical routine fails (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// n workers by d tasks, entries in {-1, 0, +1}; 0 marks a missing response
// (raw datasets only, synthetic matrices are dense). Row-major: entry(i, j)
// is worker i's answer to task j.
class ResponseMatrix {
public:
    ResponseMatrix() = default;
    ResponseMatrix(std::size_t n, std::size_t d)
        : n_(n), d_(d), entries_(n * d, 0) {}

    std::size_t workers() const { return n_; }
    std::size_t tasks() const { return d_; }

    std::int8_t entry(std::size_t i, std::size_t j) const { return entries_[i * d_ + j]; }
    std::int8_t& entry(std::size_t i, std::size_t j) { return entries_[i * d_ + j]; }

    const std::int8_t* row(std::size_t i) const { return entries_.data() + i * d_; }

    bool dense() const {
        for (std::int8_t e : entries_)
            if (e == 0) return false;
        return true;
    }

    // Validates every entry is in {-1, 0, +1} and n >= 3, d >= 1.
    void validate() const {
        if (n_ < 3) throw DataError("response matrix needs at least 3 workers");
        if (d_ < 1) throw DataError("response matrix needs at least 1 task");
        for (std::int8_t e : entries_)
            if (e < -1 || e > 1) throw DataError("response entries must be -1, 0 or +1");
    }

    bool operator==(const ResponseMatrix&) const = default;

private:
    std::size_t n_ = 0, d_ = 0;
    std::vector<std::int8_t> entries_;
};

// Row (worker) and column (task) subsets of a response matrix, preserving
// the given index order.
ResponseMatrix select_workers(const ResponseMatrix& Y, const std::vector<std::size_t>& rows);
ResponseMatrix select_tasks(const ResponseMatrix& Y, const std::vector<std::size_t>& cols);

// Per-worker reliability r_i = 2 P(correct) - 1 for one task type.
struct ReliabilityVector {
    std::vector<double> r;

    std::size_t size() const { return r.size(); }
    double operator[](std::size_t i) const { return r[i]; }

    double squared_norm() const {
        double s = 0;
        for (double v : r) s += v * v;
        return s;
    }

    double mean() const {
        double s = 0;
        for (double v : r) s += v;
        return r.empty() ? 0.0 : s / static_cast<double>(r.size());
    }

    // Entries must lie in [-1, 1] (the closed ends model perfect and
    // adversarial workers, accepted by the sampler). With margin rho > 0,
    // additionally rho <= (1 + r_i)/2 <= 1 - rho, which forces the interior.
    void validate(double rho = 0.0) const {
        for (double v : r) {
            if (!(v >= -1.0 && v <= 1.0))
                throw DataError("reliability entries must lie in [-1, 1]");
            const double acc = (1.0 + v) / 2.0;
            if (rho > 0.0 && !(acc >= rho && acc <= 1.0 - rho))
                throw DataError("reliability entry violates interior margin");
        }
    }
};

inline double dot(const ReliabilityVector& a, const ReliabilityVector& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.r[i] * b.r[i];
    return s;
}

// Per-task type labels over {1, 2}. Convention: when ground truth is known,
// type 1 is the "easy" type (larger reliability norm).
struct TypeAssignment {
    std::vector<std::uint8_t> k;

    std::size_t size() const { return k.size(); }
    std::uint8_t operator[](std::size_t j) const { return k[j]; }

    void validate() const {
        for (auto v : k)
            if (v != 1 && v != 2) throw DataError("task types must be 1 or 2");
    }
};

// Per-task truth labels over {-1, +1}.
struct TruthLabels {
    std::vector<std::int8_t> y;

    std::size_t size() const { return y.size(); }
    std::int8_t operator[](std::size_t j) const { return y[j]; }

    void validate() const {
        for (auto v : y)
            if (v != -1 && v != 1) throw DataError("truth labels must be -1 or +1");
    }
};

// Complete two-type generative model. Inference code must never read
// typeOf / y; the simulator returns them separately as an oracle record.
struct TwoTypeModel {
    ReliabilityVector r1;  // type-1 ("easy") reliabilities
    ReliabilityVector r2;  // type-2 ("hard") reliabilities
    TypeAssignment typeOf;
    TruthLabels y;
    std::uint64_t seed = 0;

    std::size_t workers() const { return r1.size(); }
    std::size_t tasks() const { return typeOf.size(); }

    void validate(bool require_easy_hard = false) const {
        if (r1.size() != r2.size())
            throw DataError("r1 and r2 must have the same length");
        if (typeOf.size() != y.size())
            throw DataError("type assignment and truth labels must have the same length");
        r1.validate();
        r2.validate();
        typeOf.validate();
        y.validate();
        if (require_easy_hard && !(r1.squared_norm() > r2.squared_norm()))
            throw DataError("easy/hard model requires ||r1|| > ||r2||");
    }
};

// Ground-truth side of a simulation, kept separate from the response matrix
// so that estimators cannot accidentally touch it.
struct OracleRecord {
    TruthLabels y;
    TypeAssignment typeOf;
    ReliabilityVector r1, r2;
};

}  // namespace crowd
