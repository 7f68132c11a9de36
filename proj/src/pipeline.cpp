#include "crowd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crowd/rng.hpp"

namespace crowd {

const char* aggregator_name(Aggregator a) {
    switch (a) {
        case Aggregator::kMajorityVote: return "mv";
        case Aggregator::kNitzanParoushOracle: return "np-oracle";
        case Aggregator::kEigenvectorRatio: return "er";
        case Aggregator::kTriangular: return "te";
    }
    return "?";
}

Aggregator aggregator_from_name(const std::string& name) {
    if (name == "mv") return Aggregator::kMajorityVote;
    if (name == "np-oracle" || name == "np") return Aggregator::kNitzanParoushOracle;
    if (name == "er") return Aggregator::kEigenvectorRatio;
    if (name == "te") return Aggregator::kTriangular;
    throw DataError("unknown aggregator: " + name);
}

namespace {

AggregationResult aggregate_once(const ResponseMatrix& Y, const PipelineConfig& cfg,
                                 const std::optional<ReliabilityVector>& oracle_r,
                                 std::vector<std::string>& flags, const char* where) {
    switch (cfg.aggregator) {
        case Aggregator::kMajorityVote:
            return majority_vote(Y, cfg.tie_seed);
        case Aggregator::kNitzanParoushOracle: {
            if (!oracle_r)
                throw DataError("np-oracle aggregator requires oracle reliabilities");
            std::optional<ReliabilityVector> r = oracle_r;
            return nitzan_paroush(Y, *r, cfg.tie_seed);
        }
        case Aggregator::kEigenvectorRatio:
            return er_labels(Y, cfg.tie_seed);
        case Aggregator::kTriangular:
            if (Y.tasks() < 2) {
                flags.push_back(std::string("te_fallback_mv_") + where);
                return majority_vote(Y, cfg.tie_seed);
            }
            return te_estimate(Y, cfg.tie_seed, cfg.te_anchor);
    }
    throw DataError("unhandled aggregator");
}

std::optional<ReliabilityVector> restrict_oracle(const std::optional<ReliabilityVector>& r,
                                                 const std::vector<std::size_t>& workers) {
    if (!r) return std::nullopt;
    ReliabilityVector out;
    out.r.reserve(workers.size());
    for (std::size_t i : workers) out.r.push_back(r->r[i]);
    return out;
}

}  // namespace

PipelineResult run_pipeline(const ResponseMatrix& Y, const PipelineConfig& cfg) {
    if (!Y.dense()) throw DataError("dense matrix required");
    const std::size_t n = Y.workers(), d = Y.tasks();

    // Worker split.
    std::vector<std::size_t> cluster_workers(n), label_workers;
    std::iota(cluster_workers.begin(), cluster_workers.end(), std::size_t{0});
    label_workers = cluster_workers;
    if (cfg.split_mode == PipelineConfig::SplitMode::kDisjoint) {
        std::size_t n1 = cfg.n1 == 0 ? n / 2 : cfg.n1;
        if (n1 < 3 || n1 + 3 > n)
            throw DataError("disjoint split needs 3 <= n1 <= n - 3");
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        SplitMix64 rng(derive_seed(cfg.split_seed, stream::kSplit));
        for (std::size_t i = n; i > 1; --i)
            std::swap(perm[i - 1], perm[rng.below(i)]);
        cluster_workers.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n1));
        label_workers.assign(perm.begin() + static_cast<std::ptrdiff_t>(n1), perm.end());
        std::sort(cluster_workers.begin(), cluster_workers.end());
        std::sort(label_workers.begin(), label_workers.end());
    }

    const ResponseMatrix Yc = cfg.split_mode == PipelineConfig::SplitMode::kReuseAll
                                  ? Y
                                  : select_workers(Y, cluster_workers);
    const ResponseMatrix Yl = cfg.split_mode == PipelineConfig::SplitMode::kReuseAll
                                  ? Y
                                  : select_workers(Y, label_workers);

    PipelineResult out;
    out.cluster_workers = cluster_workers;
    out.label_workers = label_workers;

    const ClusterResult clus = cluster_tasks(Yc, cfg.tie_seed, cfg.eigen);
    out.summary = clus.summary;
    if (clus.no_separation) out.flags.emplace_back("no_separation");

    const bool cluster_ok =
        !cfg.detection_check ||
        should_cluster(clus.summary, Yc.workers(), d, cfg.a_prime);

    const auto oracle1 = restrict_oracle(cfg.oracle_r1, label_workers);
    const auto oracle2 = restrict_oracle(cfg.oracle_r2, label_workers);

    if (!cluster_ok) {
        out.unclustered = true;
        out.flags.emplace_back("unclustered");
        AggregationResult agg = aggregate_once(Yl, cfg, oracle1, out.flags, "all");
        out.labels = std::move(agg.labels);
        out.diag_cluster1 = agg.diagnostics;
        return out;
    }

    out.type_estimate = clus.assignment;

    std::vector<std::size_t> j1, j2;
    for (std::size_t j = 0; j < d; ++j)
        (clus.assignment[j] == 1 ? j1 : j2).push_back(j);

    out.labels.y.assign(d, 0);
    auto run_branch = [&](const std::vector<std::size_t>& cols,
                          const std::optional<ReliabilityVector>& oracle_r,
                          const char* where) -> AggregationDiagnostics {
        if (cols.empty()) {
            out.flags.push_back(std::string("empty_") + where);
            return {};
        }
        const ResponseMatrix sub = select_tasks(Yl, cols);
        AggregationResult agg = aggregate_once(sub, cfg, oracle_r, out.flags, where);
        for (std::size_t t = 0; t < cols.size(); ++t) out.labels.y[cols[t]] = agg.labels[t];
        return agg.diagnostics;
    };

    out.diag_cluster1 = run_branch(j1, oracle1, "cluster1");
    out.diag_cluster2 = run_branch(j2, oracle2, "cluster2");
    return out;
}

EvalMetrics evaluate(const TruthLabels& labels, const TruthLabels& oracle,
                     const TypeAssignment& true_types,
                     const std::optional<TypeAssignment>& estimated_types) {
    const std::size_t d = oracle.size();
    if (labels.size() != d || true_types.size() != d)
        throw DataError("evaluate: length mismatch");
    if (estimated_types && estimated_types->size() != d)
        throw DataError("evaluate: type estimate length mismatch");

    EvalMetrics m;
    std::size_t wrong = 0, wrong1 = 0, wrong2 = 0, d1 = 0, d2 = 0;
    for (std::size_t j = 0; j < d; ++j) {
        const bool err = labels[j] != oracle[j];
        wrong += err;
        if (true_types[j] == 1) {
            ++d1;
            wrong1 += err;
        } else {
            ++d2;
            wrong2 += err;
        }
    }
    m.err_overall = static_cast<double>(wrong) / static_cast<double>(d);
    m.err_type1 = d1 ? static_cast<double>(wrong1) / static_cast<double>(d1)
                     : std::numeric_limits<double>::quiet_NaN();
    m.err_type2 = d2 ? static_cast<double>(wrong2) / static_cast<double>(d2)
                     : std::numeric_limits<double>::quiet_NaN();

    if (estimated_types) {
        std::size_t direct = 0, flipped = 0;
        for (std::size_t j = 0; j < d; ++j) {
            const bool same = (*estimated_types)[j] == true_types[j];
            direct += !same;
            flipped += same;
        }
        m.cluster_error =
            static_cast<double>(std::min(direct, flipped)) / static_cast<double>(d);
    } else {
        m.cluster_error = std::numeric_limits<double>::quiet_NaN();
    }
    return m;
}

}  // namespace crowd
