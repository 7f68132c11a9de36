#include "crowd/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "crowd/io.hpp"
#include "crowd/model.hpp"
#include "crowd/rng.hpp"

namespace crowd::experiments {

using nlohmann::json;

MultiTypeModel to_multi(const TwoTypeModel& m) {
    MultiTypeModel out;
    out.r = {m.r1, m.r2};
    out.typeOf = m.typeOf.k;
    out.group = m.typeOf.k;
    out.y = m.y;
    out.seed = m.seed;
    return out;
}

ResponseMatrix sample_responses(const MultiTypeModel& m) {
    const std::size_t n = m.workers(), d = m.tasks();
    for (const auto& r : m.r)
        if (r.size() != n) throw DataError("reliability vectors must share one length");
    SplitMix64 rng(derive_seed(m.seed, stream::kResponses));
    ResponseMatrix Y(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double r = m.r[m.typeOf[j] - 1][i];
            const bool correct = rng.bernoulli((1.0 + r) / 2.0);
            Y.entry(i, j) = correct ? m.y[j] : static_cast<std::int8_t>(-m.y[j]);
        }
    }
    return Y;
}

// ---------------------------------------------------------------------------
// Phase-transition construction

namespace {

// Evenly spaced ladder around 1 with the given relative spread, scaled so
// the squared norm hits target_sq.
std::vector<double> scaled_ladder(std::size_t n, double spread, double target_sq) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double frac = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.5;
        v[i] = 1.0 + spread * (2.0 * frac - 1.0);
    }
    double ssq = 0;
    for (double x : v) ssq += x * x;
    const double scale = std::sqrt(target_sq / ssq);
    for (double& x : v) x *= scale;
    if (v.back() >= 1.0)
        throw DataError("phase construction needs reliabilities below 1; lower the norms");
    return v;
}

double angle_between(double ip, double norm_prod) {
    return std::acos(std::clamp(ip / norm_prod, -1.0, 1.0));
}

}  // namespace

std::vector<PhasePoint> phase_transition_points(std::size_t n, std::size_t d,
                                                const PhaseParams& p, std::uint64_t seed) {
    if (n < 4) throw DataError("phase construction needs n >= 4");
    for (double a : p.angle_grid)
        if (!(a > 0.0 && a < 3.14159265358979323846))
            throw DataError("target angles must lie in (0, pi)");

    const double r1_norm_sq = p.r2_norm_sq + p.norm_sq_gap;
    const std::vector<double> r1 = scaled_ladder(n, p.r1_spread, r1_norm_sq);
    const std::vector<double> mags = scaled_ladder(n, p.r2_spread, p.r2_norm_sq);
    const double norm_prod = std::sqrt(r1_norm_sq * p.r2_norm_sq);
    const double min_mean =
        std::isnan(p.min_mean_r2) ? 3.0 / static_cast<double>(n) : p.min_mean_r2;

    // Start anti-sorted: the strongest type-2 magnitudes sit on the weakest
    // type-1 workers, so worker rankings differ across types. All signs
    // positive; the search introduces flips as the target angle demands.
    std::vector<double> r2(mags.rbegin(), mags.rend());
    double ip = 0, sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ip += r1[i] * r2[i];
        sum += r2[i];
    }

    SplitMix64 rng(derive_seed(seed, stream::kConstruction));
    std::vector<PhasePoint> points;
    for (std::size_t t = 0; t < p.angle_grid.size(); ++t) {
        const double target = p.angle_grid[t];
        double err = std::abs(angle_between(ip, norm_prod) - target);
        for (std::size_t step = 0; step < p.max_swaps && err > p.angle_tol; ++step) {
            const bool swap_move = rng.next_unit() < 0.5;
            std::size_t a = static_cast<std::size_t>(rng.below(n));
            double d_ip, d_sum;
            std::size_t b = 0;
            if (swap_move) {
                b = static_cast<std::size_t>(rng.below(n));
                if (a == b) continue;
                d_ip = (r1[a] - r1[b]) * (r2[b] - r2[a]);
                d_sum = 0;
            } else {
                d_ip = -2.0 * r1[a] * r2[a];
                d_sum = -2.0 * r2[a];
            }
            if (min_mean >= 0 && (sum + d_sum) / static_cast<double>(n) < min_mean) continue;
            const double new_err = std::abs(angle_between(ip + d_ip, norm_prod) - target);
            if (new_err < err) {
                if (swap_move)
                    std::swap(r2[a], r2[b]);
                else
                    r2[a] = -r2[a];
                ip += d_ip;
                sum += d_sum;
                err = new_err;
            }
        }

        PhasePoint pt;
        pt.target_angle = target;
        pt.achieved_angle = angle_between(ip, norm_prod);
        pt.angle_miss = std::abs(pt.achieved_angle - target) > p.angle_tol;
        pt.r1.r = r1;
        pt.r2.r = r2;
        pt.params = spectral_params_from_reliabilities(pt.r1, pt.r2, d);
        points.push_back(std::move(pt));
    }
    return points;
}

// ---------------------------------------------------------------------------
// Pneumonia and JSRT generators

TwoTypeModel pneumonia_model(const PneumoniaParams& p, std::size_t n, std::uint64_t seed) {
    if (n < 3) throw DataError("pneumonia model needs n >= 3");
    TwoTypeModel m;
    m.seed = seed;
    SplitMix64 rng(derive_seed(seed, stream::kConstruction));
    m.r1.r.resize(n);
    m.r2.r.resize(n);
    for (std::size_t i = 0; i < n; ++i) m.r1.r[i] = 2.0 * rng.uniform(p.sens_lo, p.sens_hi) - 1.0;
    for (std::size_t i = 0; i < n; ++i) m.r2.r[i] = 2.0 * rng.uniform(p.spec_lo, p.spec_hi) - 1.0;

    m.y = sample_truth(p.d, 0.5, seed);
    m.typeOf.k.resize(p.d);
    if (p.mode == PneumoniaMode::kTypeAccuracy) {
        for (std::size_t j = 0; j < p.d; ++j) m.typeOf.k[j] = j < p.d / 2 ? 1 : 2;
    } else {
        for (std::size_t j = 0; j < p.d; ++j) m.typeOf.k[j] = m.y[j] == 1 ? 1 : 2;
    }
    return m;
}

namespace {

struct JsrtRow {
    int subtlety;
    std::size_t count;
    double accuracy;
};

// Counts and radiologist accuracies per nodule subtlety level.
constexpr JsrtRow kJsrtTable[6] = {
    {0, 93, 0.809}, {1, 25, 0.996}, {2, 29, 0.926},
    {3, 50, 0.757}, {4, 38, 0.547}, {5, 12, 0.296},
};
constexpr std::size_t kJsrtWorkers = 20;

}  // namespace

JsrtModel jsrt_model(const JsrtParams& p, std::uint64_t seed) {
    JsrtModel out;
    MultiTypeModel& m = out.model;
    m.seed = seed;

    struct TypeSpec {
        std::size_t count;
        double accuracy;
        std::uint8_t group;
    };
    std::vector<TypeSpec> types;
    if (p.variant == JsrtVariant::kJsrt6) {
        // Subtleties 0..2 hold the three highest accuracies, 3..5 the lowest.
        for (const auto& row : kJsrtTable)
            types.push_back({row.count, row.accuracy,
                             static_cast<std::uint8_t>(row.subtlety <= 2 ? 1 : 2)});
    } else {
        double easy_acc = 0, hard_acc = 0;
        std::size_t easy_n = 0, hard_n = 0;
        for (const auto& row : kJsrtTable) {
            if (row.subtlety <= 2) {
                easy_acc += row.accuracy * static_cast<double>(row.count);
                easy_n += row.count;
            } else {
                hard_acc += row.accuracy * static_cast<double>(row.count);
                hard_n += row.count;
            }
        }
        types.push_back({easy_n, easy_acc / static_cast<double>(easy_n), 1});
        types.push_back({hard_n, hard_acc / static_cast<double>(hard_n), 2});
    }

    SplitMix64 rng(derive_seed(seed, stream::kConstruction));
    for (const auto& ts : types) {
        ReliabilityVector r;
        r.r.resize(kJsrtWorkers);
        for (std::size_t i = 0; i < kJsrtWorkers; ++i) {
            double acc = rng.uniform(ts.accuracy - p.sigma, ts.accuracy + p.sigma);
            const double clamped = std::clamp(acc, 1e-6, 1.0 - 1e-6);
            if (clamped != acc) ++out.truncated_draws;
            r.r[i] = 2.0 * clamped - 1.0;
        }
        m.r.push_back(std::move(r));
    }

    std::size_t d = 0;
    for (const auto& ts : types) d += ts.count;
    m.typeOf.reserve(d);
    m.group.reserve(d);
    for (std::size_t k = 0; k < types.size(); ++k)
        for (std::size_t c = 0; c < types[k].count; ++c) {
            m.typeOf.push_back(static_cast<std::uint8_t>(k + 1));
            m.group.push_back(types[k].group);
        }
    m.y = sample_truth(d, p.positive_prior, seed);
    return out;
}

std::pair<ReliabilityVector, ReliabilityVector> tightness_reliabilities(
    const TightnessConfig& c, std::size_t n, std::uint64_t seed) {
    SplitMix64 rng(derive_seed(seed, stream::kConstruction));
    ReliabilityVector r1, r2;
    r1.r.resize(n);
    r2.r.resize(n);
    for (std::size_t i = 0; i < n; ++i) r1.r[i] = rng.uniform(c.r1_lo, c.r1_hi);
    for (std::size_t i = 0; i < n; ++i) r2.r[i] = rng.uniform(c.r2_lo, c.r2_hi);
    // Deterministic flip set: first k positions of a seeded permutation.
    const std::size_t flips =
        static_cast<std::size_t>(std::floor(c.flip_fraction * static_cast<double>(n)));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (std::size_t i = 0; i < flips; ++i) r2.r[perm[i]] = -r2.r[perm[i]];
    return {std::move(r1), std::move(r2)};
}

std::vector<TightnessConfig> default_tightness_grid() {
    // Spans the transition zone of the clustering bound: configurations
    // whose error saturates near 1/2 carry no information about tightness.
    std::vector<TightnessConfig> grid;
    const double r2_ranges[4][2] = {
        {0.18, 0.36}, {0.25, 0.45}, {0.32, 0.52}, {0.38, 0.60}};
    const double flips[3] = {0.0, 0.15, 0.3};
    for (const auto& rr : r2_ranges)
        for (double f : flips) grid.push_back({0.45, 0.75, rr[0], rr[1], f});
    // Hardest separable row: near-saturation onset, kept off the flat top.
    for (double f : {0.15, 0.22, 0.3}) grid.push_back({0.45, 0.75, 0.42, 0.63, f});
    return grid;
}

// ---------------------------------------------------------------------------
// Harness

namespace {

struct TrialTask {
    std::string config_label;
    std::size_t trial = 0;
    std::optional<MultiTypeModel> model;  // synthetic kinds
    double omega = 0, gamma = 1;
};

std::uint64_t trial_seed(const ExperimentSpec& spec, std::size_t config_idx, std::size_t trial) {
    return derive_seed(spec.seed + trial, 0xC0DE0000ULL + config_idx);
}

std::string angle_label(double angle) {
    std::ostringstream os;
    os << "angle=" << format_double(angle);
    return os.str();
}

// Ordered (easy, hard) oracle vectors for the np-oracle aggregator.
void attach_oracle(PipelineConfig& cfg, const MultiTypeModel& m) {
    if (m.r.size() != 2) return;
    const bool first_easy = m.r[0].squared_norm() >= m.r[1].squared_norm();
    cfg.oracle_r1 = first_easy ? m.r[0] : m.r[1];
    cfg.oracle_r2 = first_easy ? m.r[1] : m.r[0];
}

}  // namespace

std::vector<TwoTypeModel> gen_phase_transition(const ExperimentSpec& spec) {
    const auto points = phase_transition_points(spec.n, spec.d, spec.phase,
                                                derive_seed(spec.seed, stream::kConstruction));
    std::vector<TwoTypeModel> models;
    for (std::size_t c = 0; c < points.size(); ++c) {
        for (std::size_t t = 0; t < spec.trials; ++t) {
            TwoTypeModel m;
            m.r1 = points[c].r1;
            m.r2 = points[c].r2;
            m.seed = trial_seed(spec, c, t);
            m.y = sample_truth(spec.d, 0.5, m.seed);
            m.typeOf.k.resize(spec.d);
            for (std::size_t j = 0; j < spec.d; ++j) m.typeOf.k[j] = j < spec.d / 2 ? 1 : 2;
            models.push_back(std::move(m));
        }
    }
    return models;
}

std::vector<TwoTypeModel> gen_pneumonia(const ExperimentSpec& spec) {
    std::vector<TwoTypeModel> models;
    const std::vector<std::size_t> n_grid =
        spec.pneumonia_n_grid.empty() ? std::vector<std::size_t>{spec.n} : spec.pneumonia_n_grid;
    PneumoniaParams p = spec.pneumonia;
    p.d = spec.d;
    for (std::size_t c = 0; c < n_grid.size(); ++c)
        for (std::size_t t = 0; t < spec.trials; ++t)
            models.push_back(pneumonia_model(p, n_grid[c], trial_seed(spec, c, t)));
    return models;
}

std::vector<MultiTypeModel> gen_jsrt(const ExperimentSpec& spec) {
    std::vector<MultiTypeModel> models;
    for (std::size_t t = 0; t < spec.trials; ++t)
        models.push_back(jsrt_model(spec.jsrt, trial_seed(spec, 0, t)).model);
    return models;
}

namespace {

std::vector<TrialTask> build_tasks(const ExperimentSpec& spec,
                                   std::map<std::string, std::string>& metadata) {
    std::vector<TrialTask> tasks;
    auto push_model = [&](const std::string& label, std::size_t trial, MultiTypeModel model) {
        TrialTask tt;
        tt.config_label = label;
        tt.trial = trial;
        if (model.r.size() == 2) {
            const auto params =
                spectral_params_from_reliabilities(model.r[0], model.r[1], model.tasks());
            tt.omega = params.omega;
            tt.gamma = params.gamma;
        }
        tt.model = std::move(model);
        tasks.push_back(std::move(tt));
    };

    switch (spec.kind) {
        case ExperimentKind::kPhaseTransition: {
            const auto points = phase_transition_points(
                spec.n, spec.d, spec.phase, derive_seed(spec.seed, stream::kConstruction));
            for (std::size_t c = 0; c < points.size(); ++c) {
                const auto& pt = points[c];
                const std::string label = angle_label(pt.target_angle);
                metadata[label + ":achieved_angle"] = format_double(pt.achieved_angle);
                metadata[label + ":angle_miss"] = pt.angle_miss ? "true" : "false";
                metadata[label + ":norm_sq_gap"] =
                    format_double(pt.r1.squared_norm() - pt.r2.squared_norm());
                for (std::size_t t = 0; t < spec.trials; ++t) {
                    TwoTypeModel m;
                    m.r1 = pt.r1;
                    m.r2 = pt.r2;
                    m.seed = trial_seed(spec, c, t);
                    m.y = sample_truth(spec.d, 0.5, m.seed);
                    m.typeOf.k.resize(spec.d);
                    for (std::size_t j = 0; j < spec.d; ++j)
                        m.typeOf.k[j] = j < spec.d / 2 ? 1 : 2;
                    push_model(label, t, to_multi(m));
                }
            }
            break;
        }
        case ExperimentKind::kClusterTightness: {
            const auto grid =
                spec.tightness_grid.empty() ? default_tightness_grid() : spec.tightness_grid;
            for (std::size_t c = 0; c < grid.size(); ++c) {
                const auto [r1, r2] = tightness_reliabilities(
                    grid[c], spec.n, derive_seed(spec.seed, 0xF17u + c));
                const auto params = spectral_params_from_reliabilities(r1, r2, spec.d);
                const std::string label = "config" + std::to_string(c);
                metadata[label + ":gamma"] = format_double(params.gamma);
                metadata[label + ":delta_appendix"] = format_double(params.delta_appendix);
                for (std::size_t t = 0; t < spec.trials; ++t) {
                    TwoTypeModel m;
                    m.r1 = r1;
                    m.r2 = r2;
                    m.seed = trial_seed(spec, c, t);
                    m.y = sample_truth(spec.d, 0.5, m.seed);
                    m.typeOf.k.resize(spec.d);
                    for (std::size_t j = 0; j < spec.d; ++j)
                        m.typeOf.k[j] = j < spec.d / 2 ? 1 : 2;
                    push_model(label, t, to_multi(m));
                }
            }
            break;
        }
        case ExperimentKind::kPneumonia: {
            const std::vector<std::size_t> n_grid = spec.pneumonia_n_grid.empty()
                                                        ? std::vector<std::size_t>{spec.n}
                                                        : spec.pneumonia_n_grid;
            PneumoniaParams p = spec.pneumonia;
            p.d = spec.d;
            for (std::size_t c = 0; c < n_grid.size(); ++c) {
                const std::string label = "n=" + std::to_string(n_grid[c]);
                for (std::size_t t = 0; t < spec.trials; ++t)
                    push_model(label, t,
                               to_multi(pneumonia_model(p, n_grid[c], trial_seed(spec, c, t))));
            }
            break;
        }
        case ExperimentKind::kJsrt: {
            const std::string label =
                spec.jsrt.variant == JsrtVariant::kJsrt2 ? "jsrt2" : "jsrt6";
            std::size_t truncated = 0;
            for (std::size_t t = 0; t < spec.trials; ++t) {
                JsrtModel jm = jsrt_model(spec.jsrt, trial_seed(spec, 0, t));
                truncated += jm.truncated_draws;
                push_model(label, t, std::move(jm.model));
            }
            if (truncated)
                metadata[label + ":truncated_draws"] = std::to_string(truncated);
            break;
        }
        case ExperimentKind::kRealDataset: {
            for (std::size_t t = 0; t < spec.trials; ++t) {
                TrialTask tt;
                tt.config_label = "dataset";
                tt.trial = t;
                tasks.push_back(std::move(tt));
            }
            break;
        }
    }
    return tasks;
}

struct TrialOutput {
    std::vector<ResultRow> rows;
};

}  // namespace

ExperimentTable run_experiment(const ExperimentSpec& spec) {
    if (spec.trials < 1) throw DataError("experiment needs at least one trial");

    ExperimentTable table;
    std::vector<TrialTask> tasks = build_tasks(spec, table.metadata);

    // Real datasets are loaded once; trials differ in imputation seed.
    std::optional<DatasetBundle> bundle;
    if (spec.kind == ExperimentKind::kRealDataset) {
        bundle = load_dataset(spec.responses_path, spec.truth_path);
        table.metadata["dataset:workers"] = std::to_string(bundle->raw.workers());
        table.metadata["dataset:tasks"] = std::to_string(bundle->raw.tasks());
    }

    std::vector<TrialOutput> outputs(tasks.size());
    std::size_t failures = 0;

#pragma omp parallel for schedule(dynamic) reduction(+ : failures)
    for (std::ptrdiff_t idx = 0; idx < static_cast<std::ptrdiff_t>(tasks.size()); ++idx) {
        const TrialTask& tt = tasks[static_cast<std::size_t>(idx)];
        TrialOutput& out = outputs[static_cast<std::size_t>(idx)];
        try {
            ResponseMatrix Y;
            TruthLabels truth;
            TypeAssignment group;
            double omega = tt.omega, gamma = tt.gamma;

            if (spec.kind == ExperimentKind::kRealDataset) {
                const ImputedDataset imp = impute_dataset(
                    *bundle, spec.min_labels, derive_seed(spec.seed + tt.trial, 0xDA7Au));
                Y = imp.dense;
                truth = bundle->truth;
                group = imp.types;
                omega = imp.params.omega;
                gamma = imp.params.gamma;
            } else {
                Y = sample_responses(*tt.model);
                truth = tt.model->y;
                group.k = tt.model->group;
            }

            // Shared spectral diagnostics for every row of this trial.
            const ClusterResult cr = cluster_tasks(Y, spec.pipeline.tie_seed, spec.pipeline.eigen);
            const double detect = cr.summary.detect_stat;

            if (spec.algos.empty()) {
                // Clustering-only experiment: one row per trial.
                ResultRow row;
                row.spec_id = tt.config_label;
                row.trial = tt.trial;
                row.algo = "cluster";
                row.clustered = true;
                row.metrics = evaluate(truth, truth, group, cr.assignment);
                row.metrics.err_overall = std::numeric_limits<double>::quiet_NaN();
                row.metrics.err_type1 = row.metrics.err_type2 =
                    std::numeric_limits<double>::quiet_NaN();
                row.detect_stat = detect;
                row.omega = omega;
                row.gamma = gamma;
                out.rows.push_back(std::move(row));
            }

            for (Aggregator algo : spec.algos) {
                PipelineConfig cfg = spec.pipeline;
                cfg.aggregator = algo;
                if (algo == Aggregator::kNitzanParoushOracle) {
                    if (spec.kind == ExperimentKind::kRealDataset ||
                        tt.model->r.size() != 2)
                        throw DataError("np-oracle needs a two-type synthetic model");
                    attach_oracle(cfg, *tt.model);
                }

                if (spec.run_unclustered) {
                    ResultRow row;
                    row.spec_id = tt.config_label;
                    row.trial = tt.trial;
                    row.algo = aggregator_name(algo);
                    row.clustered = false;
                    AggregationResult agg = [&] {
                        switch (algo) {
                            case Aggregator::kMajorityVote:
                                return majority_vote(Y, cfg.tie_seed);
                            case Aggregator::kNitzanParoushOracle:
                                return nitzan_paroush(Y, *cfg.oracle_r1, cfg.tie_seed);
                            case Aggregator::kEigenvectorRatio:
                                return er_labels(Y, cfg.tie_seed);
                            case Aggregator::kTriangular:
                                return te_estimate(Y, cfg.tie_seed, cfg.te_anchor);
                        }
                        throw DataError("unhandled aggregator");
                    }();
                    row.metrics = evaluate(agg.labels, truth, group, std::nullopt);
                    row.detect_stat = detect;
                    row.omega = omega;
                    row.gamma = gamma;
                    out.rows.push_back(std::move(row));
                }

                if (spec.run_clustered) {
                    ResultRow row;
                    row.spec_id = tt.config_label;
                    row.trial = tt.trial;
                    row.algo = aggregator_name(algo);
                    row.clustered = true;
                    const PipelineResult pr = run_pipeline(Y, cfg);
                    row.metrics = evaluate(pr.labels, truth, group, pr.type_estimate);
                    row.detect_stat = detect;
                    row.omega = omega;
                    row.gamma = gamma;
                    out.rows.push_back(std::move(row));
                }
            }
        } catch (const std::exception& e) {
            out.rows.clear();
            ResultRow row;
            row.spec_id = tt.config_label;
            row.trial = tt.trial;
            row.algo = "";
            row.status = std::string("failed: ") + e.what();
            // Keep the status cell CSV-safe.
            std::replace(row.status.begin(), row.status.end(), ',', ';');
            std::replace(row.status.begin(), row.status.end(), '\n', ' ');
            row.metrics.err_overall = std::numeric_limits<double>::quiet_NaN();
            row.metrics.err_type1 = row.metrics.err_type2 = row.metrics.cluster_error =
                std::numeric_limits<double>::quiet_NaN();
            out.rows.push_back(std::move(row));
            failures += 1;
        }
    }

    if (failures * 2 > tasks.size())
        throw DataError("more than half of the experiment trials failed");

    for (auto& o : outputs)
        for (auto& r : o.rows) table.rows.push_back(std::move(r));

    // Per-(config, algo, stage) summaries in first-appearance order.
    struct Accum {
        SummaryRow s;
        std::size_t n_err = 0, n_t1 = 0, n_t2 = 0, n_cl = 0;
        std::vector<double> errs;
    };
    std::vector<std::string> keys;
    std::map<std::string, Accum> acc;
    for (const ResultRow& r : table.rows) {
        if (r.status != "ok") continue;
        const std::string key = r.spec_id + "\x1f" + r.algo + "\x1f" + (r.clustered ? "1" : "0");
        if (!acc.count(key)) {
            keys.push_back(key);
            acc[key].s.spec_id = r.spec_id;
            acc[key].s.algo = r.algo;
            acc[key].s.clustered = r.clustered;
        }
        Accum& a = acc[key];
        ++a.s.trials_ok;
        if (!std::isnan(r.metrics.err_overall)) {
            a.s.err_mean += r.metrics.err_overall;
            ++a.n_err;
            a.errs.push_back(r.metrics.err_overall);
        }
        if (!std::isnan(r.metrics.err_type1)) {
            a.s.err_type1_mean += r.metrics.err_type1;
            ++a.n_t1;
        }
        if (!std::isnan(r.metrics.err_type2)) {
            a.s.err_type2_mean += r.metrics.err_type2;
            ++a.n_t2;
        }
        if (!std::isnan(r.metrics.cluster_error)) {
            a.s.cluster_err_mean += r.metrics.cluster_error;
            ++a.n_cl;
        }
        a.s.detect_stat_mean += r.detect_stat;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const std::string& key : keys) {
        Accum& a = acc[key];
        SummaryRow s = a.s;
        const double nt = static_cast<double>(s.trials_ok);
        s.err_mean = a.n_err ? s.err_mean / static_cast<double>(a.n_err) : nan;
        s.err_type1_mean = a.n_t1 ? s.err_type1_mean / static_cast<double>(a.n_t1) : nan;
        s.err_type2_mean = a.n_t2 ? s.err_type2_mean / static_cast<double>(a.n_t2) : nan;
        s.cluster_err_mean = a.n_cl ? s.cluster_err_mean / static_cast<double>(a.n_cl) : nan;
        s.detect_stat_mean /= nt;
        double var = 0;
        for (double e : a.errs) var += (e - s.err_mean) * (e - s.err_mean);
        s.err_stderr = a.n_err > 1 ? std::sqrt(var / (static_cast<double>(a.n_err) *
                                                      (static_cast<double>(a.n_err) - 1.0)))
                                   : 0.0;
        table.summaries.push_back(std::move(s));
    }
    return table;
}

void write_results_csv(std::ostream& out, const ExperimentTable& table) {
    out << "spec_id,trial,algo,clustered,err_overall,err_type1,err_type2,cluster_err,"
           "detect_stat,omega,gamma,status\n";
    for (const ResultRow& r : table.rows) {
        out << r.spec_id << ',' << r.trial << ',' << r.algo << ',' << (r.clustered ? 1 : 0)
            << ',' << format_double(r.metrics.err_overall) << ','
            << format_double(r.metrics.err_type1) << ',' << format_double(r.metrics.err_type2)
            << ',' << format_double(r.metrics.cluster_error) << ','
            << format_double(r.detect_stat) << ',' << format_double(r.omega) << ','
            << format_double(r.gamma) << ',' << r.status << '\n';
    }
}

void write_summary_csv(std::ostream& out, const ExperimentTable& table) {
    out << "spec_id,algo,clustered,trials_ok,err_mean,err_stderr,err_type1_mean,"
           "err_type2_mean,cluster_err_mean,detect_stat_mean\n";
    for (const SummaryRow& s : table.summaries) {
        out << s.spec_id << ',' << s.algo << ',' << (s.clustered ? 1 : 0) << ',' << s.trials_ok
            << ',' << format_double(s.err_mean) << ',' << format_double(s.err_stderr) << ','
            << format_double(s.err_type1_mean) << ',' << format_double(s.err_type2_mean) << ','
            << format_double(s.cluster_err_mean) << ',' << format_double(s.detect_stat_mean)
            << '\n';
    }
}

namespace {

json spec_to_json(const ExperimentSpec& s) {
    json j;
    switch (s.kind) {
        case ExperimentKind::kPhaseTransition: j["kind"] = "phase_transition"; break;
        case ExperimentKind::kClusterTightness: j["kind"] = "cluster_tightness"; break;
        case ExperimentKind::kPneumonia: j["kind"] = "pneumonia"; break;
        case ExperimentKind::kJsrt: j["kind"] = "jsrt"; break;
        case ExperimentKind::kRealDataset: j["kind"] = "real_dataset"; break;
    }
    j["id"] = s.id;
    j["trials"] = s.trials;
    j["seed"] = s.seed;
    j["n"] = s.n;
    j["d"] = s.d;
    json algos = json::array();
    for (Aggregator a : s.algos) algos.push_back(aggregator_name(a));
    j["algos"] = algos;
    j["clustered"] = s.run_clustered;
    j["unclustered"] = s.run_unclustered;
    json pipe;
    pipe["split"] =
        s.pipeline.split_mode == PipelineConfig::SplitMode::kReuseAll ? "reuse_all" : "disjoint";
    pipe["n1"] = s.pipeline.n1;
    pipe["detection"] = s.pipeline.detection_check ? "check" : "always";
    pipe["a_prime"] = s.pipeline.a_prime;
    pipe["tie_seed"] = s.pipeline.tie_seed;
    pipe["split_seed"] = s.pipeline.split_seed;
    pipe["te_anchor"] = s.pipeline.te_anchor == TeSignAnchor::kPositiveMean
                            ? "positive_mean"
                            : "reference_plus_one";
    j["pipeline"] = pipe;
    return j;
}

}  // namespace

void write_meta_json(std::ostream& out, const ExperimentSpec& spec,
                     const ExperimentTable& table) {
    json j;
    j["spec"] = spec_to_json(spec);
    json meta;
    for (const auto& [k, v] : table.metadata) meta[k] = v;
    j["metadata"] = meta;
    j["rows"] = table.rows.size();
    out << j.dump(2) << '\n';
}

ExperimentSpec spec_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("bad experiment config: ") + e.what());
    }

    ExperimentSpec s;
    const std::string kind = j.value("kind", "");
    if (kind == "phase_transition")
        s.kind = ExperimentKind::kPhaseTransition;
    else if (kind == "cluster_tightness")
        s.kind = ExperimentKind::kClusterTightness;
    else if (kind == "pneumonia")
        s.kind = ExperimentKind::kPneumonia;
    else if (kind == "jsrt")
        s.kind = ExperimentKind::kJsrt;
    else if (kind == "real_dataset")
        s.kind = ExperimentKind::kRealDataset;
    else
        throw DataError("unknown experiment kind: '" + kind + "'");

    s.id = j.value("id", kind);
    s.trials = j.value("trials", std::size_t{1});
    s.seed = j.value("seed", std::uint64_t{0});
    s.n = j.value("n", std::size_t{50});
    s.d = j.value("d", std::size_t{200});
    if (j.contains("algos"))
        for (const auto& a : j["algos"]) s.algos.push_back(aggregator_from_name(a));
    s.run_clustered = j.value("clustered", true);
    s.run_unclustered = j.value("unclustered", true);

    if (j.contains("pipeline")) {
        const json& p = j["pipeline"];
        const std::string split = p.value("split", "reuse_all");
        if (split == "reuse_all")
            s.pipeline.split_mode = PipelineConfig::SplitMode::kReuseAll;
        else if (split == "disjoint")
            s.pipeline.split_mode = PipelineConfig::SplitMode::kDisjoint;
        else
            throw DataError("unknown split mode: " + split);
        s.pipeline.n1 = p.value("n1", std::size_t{0});
        const std::string det = p.value("detection", "always");
        if (det == "check")
            s.pipeline.detection_check = true;
        else if (det == "always")
            s.pipeline.detection_check = false;
        else
            throw DataError("unknown detection mode: " + det);
        s.pipeline.a_prime = p.value("a_prime", 1.0);
        s.pipeline.tie_seed = p.value("tie_seed", std::uint64_t{0});
        s.pipeline.split_seed = p.value("split_seed", std::uint64_t{0});
        const std::string anchor = p.value("te_anchor", "positive_mean");
        if (anchor == "positive_mean")
            s.pipeline.te_anchor = TeSignAnchor::kPositiveMean;
        else if (anchor == "reference_plus_one")
            s.pipeline.te_anchor = TeSignAnchor::kReferencePlusOne;
        else
            throw DataError("unknown te_anchor: " + anchor);
    }

    const json params = j.value("params", json::object());
    switch (s.kind) {
        case ExperimentKind::kPhaseTransition: {
            if (params.contains("angle_grid"))
                s.phase.angle_grid = params["angle_grid"].get<std::vector<double>>();
            s.phase.norm_sq_gap = params.value("norm_sq_gap", s.phase.norm_sq_gap);
            s.phase.r2_norm_sq = params.value("r2_norm_sq", s.phase.r2_norm_sq);
            s.phase.r1_spread = params.value("r1_spread", s.phase.r1_spread);
            s.phase.r2_spread = params.value("r2_spread", s.phase.r2_spread);
            s.phase.angle_tol = params.value("angle_tol", s.phase.angle_tol);
            s.phase.max_swaps = params.value("max_swaps", s.phase.max_swaps);
            if (params.contains("min_mean_r2"))
                s.phase.min_mean_r2 = params["min_mean_r2"].get<double>();
            if (s.phase.angle_grid.empty())
                throw DataError("phase_transition needs params.angle_grid");
            break;
        }
        case ExperimentKind::kClusterTightness: {
            if (params.contains("grid")) {
                for (const auto& g : params["grid"]) {
                    TightnessConfig c;
                    c.r1_lo = g.value("r1_lo", c.r1_lo);
                    c.r1_hi = g.value("r1_hi", c.r1_hi);
                    c.r2_lo = g.value("r2_lo", c.r2_lo);
                    c.r2_hi = g.value("r2_hi", c.r2_hi);
                    c.flip_fraction = g.value("flip_fraction", c.flip_fraction);
                    s.tightness_grid.push_back(c);
                }
            }
            break;
        }
        case ExperimentKind::kPneumonia: {
            const std::string mode = params.value("mode", "type_accuracy");
            if (mode == "type_accuracy")
                s.pneumonia.mode = PneumoniaMode::kTypeAccuracy;
            else if (mode == "class_conditional")
                s.pneumonia.mode = PneumoniaMode::kClassConditional;
            else
                throw DataError("unknown pneumonia mode: " + mode);
            s.pneumonia.sens_lo = params.value("sens_lo", s.pneumonia.sens_lo);
            s.pneumonia.sens_hi = params.value("sens_hi", s.pneumonia.sens_hi);
            s.pneumonia.spec_lo = params.value("spec_lo", s.pneumonia.spec_lo);
            s.pneumonia.spec_hi = params.value("spec_hi", s.pneumonia.spec_hi);
            if (params.contains("n_grid"))
                s.pneumonia_n_grid = params["n_grid"].get<std::vector<std::size_t>>();
            break;
        }
        case ExperimentKind::kJsrt: {
            const std::string variant = params.value("variant", "jsrt2");
            if (variant == "jsrt2")
                s.jsrt.variant = JsrtVariant::kJsrt2;
            else if (variant == "jsrt6")
                s.jsrt.variant = JsrtVariant::kJsrt6;
            else
                throw DataError("unknown jsrt variant: " + variant);
            s.jsrt.sigma = params.value("sigma", s.jsrt.sigma);
            s.jsrt.positive_prior = params.value("positive_prior", s.jsrt.positive_prior);
            break;
        }
        case ExperimentKind::kRealDataset: {
            s.responses_path = params.value("responses", "");
            s.truth_path = params.value("truth", "");
            if (s.responses_path.empty() || s.truth_path.empty())
                throw DataError("real_dataset needs params.responses and params.truth");
            s.min_labels = params.value("min_labels", std::size_t{10});
            break;
        }
    }
    return s;
}

ExperimentSpec spec_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return spec_from_json_text(ss.str());
}

}  // namespace crowd::experiments
