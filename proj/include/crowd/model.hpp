#pragma once

#include <cstdint>

#include "crowd/types.hpp"

namespace crowd {

// Draws d truth labels, each +1 independently with probability
// positive_prior. Deterministic given seed (stream tag kTruth, task order).
TruthLabels sample_truth(std::size_t d, double positive_prior, std::uint64_t seed);

// Draws the full response matrix: worker i answers task j correctly with
// probability (1 + r_{k_j, i}) / 2. Entries are mutually independent and the
// draw order is worker-major (i outer, j inner), which together with the
// seeded stream makes two calls with the same model bit-identical.
ResponseMatrix sample_responses(const TwoTypeModel& model);

// Result of a simulation: the observable matrix plus the hidden truth.
struct Simulation {
    ResponseMatrix responses;
    OracleRecord oracle;
};

Simulation simulate(const TwoTypeModel& model);

}  // namespace crowd
