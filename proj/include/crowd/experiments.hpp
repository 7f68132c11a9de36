#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crowd/datasets.hpp"
#include "crowd/pipeline.hpp"
#include "crowd/types.hpp"

namespace crowd::experiments {

// K-type generalization of the two-type model used by the multi-subtlety
// experiments. `group` is the oracle binary difficulty group each task
// belongs to (for K = 2 it equals typeOf); labels remain binary.
struct MultiTypeModel {
    std::vector<ReliabilityVector> r;   // K vectors, each of length n
    std::vector<std::uint8_t> typeOf;   // per-task type in 1..K
    std::vector<std::uint8_t> group;    // per-task difficulty group in {1, 2}
    TruthLabels y;
    std::uint64_t seed = 0;

    std::size_t workers() const { return r.empty() ? 0 : r[0].size(); }
    std::size_t tasks() const { return typeOf.size(); }
};

MultiTypeModel to_multi(const TwoTypeModel& m);
ResponseMatrix sample_responses(const MultiTypeModel& m);

// ---------------------------------------------------------------------------
// Generators

struct PhaseParams {
    std::vector<double> angle_grid;      // target angles in (0, pi)
    double norm_sq_gap = 13.0;           // ||r1||^2 - ||r2||^2
    double r2_norm_sq = 8.0;
    // Relative ladder spreads. r1 needs real heterogeneity: under the mean
    // floor on r2, anti-alignment is bought by pairing negative entries
    // with large r1 values and the compensating positive mass with small
    // ones, so a flat r1 caps the reachable angle near pi/2.
    double r1_spread = 0.45;
    double r2_spread = 0.25;
    double angle_tol = 0.02;
    std::size_t max_swaps = 60000;
    // Identifiability floor on the mean of r2; negative disables the
    // constraint. Resolved to 3/n when left at the default NaN.
    double min_mean_r2 = std::numeric_limits<double>::quiet_NaN();
};

struct PhasePoint {
    double target_angle = 0;
    double achieved_angle = 0;
    bool angle_miss = false;
    ReliabilityVector r1, r2;
    SpectralParams params;
};

// Builds one reliability pair per target angle: both entry-magnitude
// multisets are fixed; a seeded local search over permutations and sign
// flips of r2 steers the angle toward each target. Targets outside the
// feasible cone come back with the closest achievable angle and the miss
// flag set. d only scales the attached spectral parameters.
std::vector<PhasePoint> phase_transition_points(std::size_t n, std::size_t d,
                                                const PhaseParams& p, std::uint64_t seed);

enum class PneumoniaMode { kTypeAccuracy, kClassConditional };

struct PneumoniaParams {
    PneumoniaMode mode = PneumoniaMode::kTypeAccuracy;
    double sens_lo = 0.33, sens_hi = 0.777;
    double spec_lo = 0.588, spec_hi = 0.94;
    std::size_t d = 200;
};

// One trial model: worker accuracies drawn uniformly from the reported
// sensitivity/specificity ranges. kTypeAccuracy assigns half the tasks to
// each type; kClassConditional makes the type mirror the truth class.
TwoTypeModel pneumonia_model(const PneumoniaParams& p, std::size_t n, std::uint64_t seed);

enum class JsrtVariant { kJsrt2, kJsrt6 };

struct JsrtParams {
    JsrtVariant variant = JsrtVariant::kJsrt2;
    double sigma = 0.05;           // accuracy half-width per type
    double positive_prior = 0.5;   // nodule-presence prior
};

struct JsrtModel {
    MultiTypeModel model;
    std::size_t truncated_draws = 0;  // accuracy draws clamped into (0, 1)
};

// Radiologist panel model (n = 20). kJsrt6 keeps the six subtlety types;
// kJsrt2 merges the three higher and three lower accuracies into one easy
// and one hard type with count-weighted mean accuracies.
JsrtModel jsrt_model(const JsrtParams& p, std::uint64_t seed);

struct TightnessConfig {
    double r1_lo = 0.45, r1_hi = 0.75;
    double r2_lo = 0.25, r2_hi = 0.45;
    double flip_fraction = 0.0;  // fraction of r2 entries with flipped sign
};

// Reliability pair with seeded uniform entries and a deterministic set of
// sign flips; fixed per configuration so every trial shares the same
// population gamma and Delta.
std::pair<ReliabilityVector, ReliabilityVector> tightness_reliabilities(
    const TightnessConfig& c, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiment harness

enum class ExperimentKind { kPhaseTransition, kClusterTightness, kPneumonia, kJsrt, kRealDataset };

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::kPhaseTransition;
    std::string id = "experiment";
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    std::size_t n = 50, d = 200;
    std::vector<Aggregator> algos;
    bool run_clustered = true;
    bool run_unclustered = true;
    PipelineConfig pipeline;  // aggregator field is overridden per algo

    PhaseParams phase;
    PneumoniaParams pneumonia;
    std::vector<std::size_t> pneumonia_n_grid;  // worker sweep; empty = {n}
    JsrtParams jsrt;
    std::vector<TightnessConfig> tightness_grid;

    std::string responses_path, truth_path;
    std::size_t min_labels = 10;
};

// Built-in (gamma, Delta) sweep used when a tightness spec gives no grid.
std::vector<TightnessConfig> default_tightness_grid();

// Per-(configuration, trial, algorithm, stage) result row. Column order in
// the CSV: spec_id, trial, algo, clustered, err_overall, err_type1,
// err_type2, cluster_err, detect_stat, omega, gamma, status.
struct ResultRow {
    std::string spec_id;
    std::size_t trial = 0;
    std::string algo;
    bool clustered = false;
    EvalMetrics metrics;
    double detect_stat = 0;
    double omega = 0, gamma = 1;
    std::string status = "ok";
};

struct SummaryRow {
    std::string spec_id;
    std::string algo;
    bool clustered = false;
    std::size_t trials_ok = 0;
    double err_mean = 0, err_stderr = 0;
    double err_type1_mean = 0, err_type2_mean = 0;
    double cluster_err_mean = 0;
    double detect_stat_mean = 0;
};

struct ExperimentTable {
    std::vector<ResultRow> rows;
    std::vector<SummaryRow> summaries;
    std::map<std::string, std::string> metadata;  // achieved angles, norms, ...
};

// Runs every configuration x trial x algorithm combination. Trials run in
// parallel; rows are emitted in deterministic (config, trial, algo, stage)
// order. A failing trial contributes "failed" rows and the run continues;
// more than half the trials failing is an error.
ExperimentTable run_experiment(const ExperimentSpec& spec);

void write_results_csv(std::ostream& out, const ExperimentTable& table);
void write_summary_csv(std::ostream& out, const ExperimentTable& table);
// Echoes the spec plus run metadata for provenance.
void write_meta_json(std::ostream& out, const ExperimentSpec& spec, const ExperimentTable& table);

ExperimentSpec spec_from_json_file(const std::string& path);
ExperimentSpec spec_from_json_text(const std::string& text);

// Spec-level generator entry points: the full model list an experiment
// consumes, one model per (configuration, trial).
std::vector<TwoTypeModel> gen_phase_transition(const ExperimentSpec& spec);
std::vector<TwoTypeModel> gen_pneumonia(const ExperimentSpec& spec);
std::vector<MultiTypeModel> gen_jsrt(const ExperimentSpec& spec);

}  // namespace crowd::experiments
