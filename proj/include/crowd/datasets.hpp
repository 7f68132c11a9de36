#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crowd/spectral.hpp"
#include "crowd/types.hpp"

namespace crowd {

// A raw crowdsourcing dataset: sparse responses densified into a matrix
// with 0 marking missing answers, plus ground truth for every task.
struct DatasetBundle {
    ResponseMatrix raw;
    TruthLabels truth;
    std::vector<std::string> worker_ids;
    std::vector<std::string> task_ids;
    std::string source;                    // responses path
    std::vector<std::string> processing;   // log of applied steps
};

// Reads a (worker_id, task_id, label) CSV and a (task_id, label) truth CSV.
// Labels may be {-1, +1} or {0, 1}; the latter is mapped to -1/+1. Worker
// and task indices follow first appearance. Duplicate (worker, task) pairs
// and truth rows for unknown tasks are errors.
DatasetBundle load_dataset(const std::string& responses_path, const std::string& truth_path);

struct ImputedDataset {
    ResponseMatrix dense;
    ReliabilityVector r1, r2;       // empirical, from observed entries only
    TypeAssignment types;           // rank split: type 1 = higher-accuracy half
    SpectralParams params;          // from the empirical reliabilities
    std::vector<std::string> kept_worker_ids;
    std::size_t dropped_workers = 0;
    std::size_t imputed_entries = 0;
};

// Preprocessing for sparse datasets: drop workers with at most min_labels
// responses, split tasks into two difficulty types by their empirical
// accuracy rank (ties by task index, the extra task of an odd count goes to
// type 1), compute per-type empirical worker reliabilities, then fill each
// missing entry by sampling a correct/incorrect answer at the worker's
// type reliability. Observed entries are never altered.
ImputedDataset impute_dataset(const DatasetBundle& bundle, std::size_t min_labels,
                              std::uint64_t seed);

}  // namespace crowd
