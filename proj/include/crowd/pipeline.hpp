#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crowd/aggregators.hpp"
#include "crowd/spectral.hpp"
#include "crowd/types.hpp"

namespace crowd {

enum class Aggregator { kMajorityVote, kNitzanParoushOracle, kEigenvectorRatio, kTriangular };

const char* aggregator_name(Aggregator a);
Aggregator aggregator_from_name(const std::string& name);

struct PipelineConfig {
    Aggregator aggregator = Aggregator::kTriangular;

    enum class SplitMode { kReuseAll, kDisjoint } split_mode = SplitMode::kReuseAll;
    std::size_t n1 = 0;  // clustering workers under kDisjoint; 0 means n/2

    // When true, tasks are clustered only if the detection pre-check fires.
    bool detection_check = false;
    double a_prime = 1.0;

    std::uint64_t split_seed = 0;
    std::uint64_t tie_seed = 0;

    // True per-type reliabilities for the oracle Nitzan-Paroush variant.
    // Excluded from headline comparisons; used in weight-mismatch studies.
    std::optional<ReliabilityVector> oracle_r1, oracle_r2;

    TeSignAnchor te_anchor = TeSignAnchor::kPositiveMean;
    EigenOptions eigen;
};

struct PipelineResult {
    TruthLabels labels;
    // Cluster estimate in original task order; absent on the unclustered path.
    std::optional<TypeAssignment> type_estimate;
    SpectralSummary summary;  // from the clustering worker set
    bool unclustered = false;
    std::vector<std::string> flags;
    AggregationDiagnostics diag_cluster1, diag_cluster2;
    // Worker index sets actually used for each stage (equal under kReuseAll).
    std::vector<std::size_t> cluster_workers, label_workers;
};

// The two-stage procedure: split workers, cluster tasks with the first set,
// aggregate each cluster independently with the second set, merge labels
// back into the original task order.
PipelineResult run_pipeline(const ResponseMatrix& Y, const PipelineConfig& cfg);

struct EvalMetrics {
    double err_overall = 0;
    double err_type1 = 0, err_type2 = 0;  // by true type; NaN when a type is absent
    double cluster_error = 0;             // best permutation; NaN without an estimate
};

// Error rates of an estimate against the oracle, with the clustering error
// minimized over the two cluster relabelings.
EvalMetrics evaluate(const TruthLabels& labels, const TruthLabels& oracle,
                     const TypeAssignment& true_types,
                     const std::optional<TypeAssignment>& estimated_types);

}  // namespace crowd
