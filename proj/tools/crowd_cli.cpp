#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "crowd/experiments.hpp"
#include "crowd/io.hpp"
#include "crowd/kernels.hpp"
#include "crowd/model.hpp"
#include "crowd/pipeline.hpp"
#include "crowd/rng.hpp"
#include "crowd/theory.hpp"

namespace {

using nlohmann::json;

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw crowd::DataError("bad number '" + item + "'");
        }
    }
    return out;
}

crowd::ReliabilityVector parse_reliabilities(const std::string& csv) {
    crowd::ReliabilityVector r;
    r.r = parse_doubles(csv);
    return r;
}

void write_labels_csv(const std::string& path, const crowd::TruthLabels& labels) {
    std::ofstream out(path);
    if (!out) throw crowd::DataError("cannot write " + path);
    out << "task,label\n";
    for (std::size_t j = 0; j < labels.size(); ++j)
        out << j << ',' << static_cast<int>(labels[j]) << '\n';
}

struct SimulateArgs {
    std::size_t n = 50, d = 200;
    std::uint64_t seed = 0;
    double prior = 0.5;
    std::string r1_spec = "0.5:0.9";
    std::string r2_spec;
    std::string out_dir = ".";
};

crowd::ReliabilityVector draw_range(const std::string& spec, std::size_t n, std::uint64_t seed,
                                    std::uint64_t tag) {
    const std::size_t colon = spec.find(':');
    if (colon == std::string::npos)
        throw crowd::DataError("reliability range must be lo:hi, got '" + spec + "'");
    const double lo = std::stod(spec.substr(0, colon));
    const double hi = std::stod(spec.substr(colon + 1));
    if (!(lo <= hi)) throw crowd::DataError("reliability range must satisfy lo <= hi");
    crowd::SplitMix64 rng(crowd::derive_seed(seed, tag));
    crowd::ReliabilityVector r;
    r.r.resize(n);
    for (double& v : r.r) v = rng.uniform(lo, hi);
    return r;
}

int run_simulate(const SimulateArgs& a) {
    crowd::TwoTypeModel m;
    m.seed = a.seed;
    m.r1 = draw_range(a.r1_spec, a.n, a.seed, 101);
    m.r2 = a.r2_spec.empty() ? m.r1 : draw_range(a.r2_spec, a.n, a.seed, 102);
    m.y = crowd::sample_truth(a.d, a.prior, a.seed);
    m.typeOf.k.resize(a.d);
    for (std::size_t j = 0; j < a.d; ++j) m.typeOf.k[j] = j < a.d / 2 ? 1 : 2;

    const crowd::Simulation sim = crowd::simulate(m);
    std::filesystem::create_directories(a.out_dir);
    crowd::write_matrix_csv(a.out_dir + "/responses.csv", sim.responses);

    std::ofstream truth(a.out_dir + "/truth.csv");
    truth << "task,label\n";
    for (std::size_t j = 0; j < a.d; ++j)
        truth << j << ',' << static_cast<int>(sim.oracle.y[j]) << '\n';

    // Hidden state lives in its own file so estimator inputs stay clean.
    json oracle;
    oracle["types"] = sim.oracle.typeOf.k;
    oracle["r1"] = sim.oracle.r1.r;
    oracle["r2"] = sim.oracle.r2.r;
    oracle["seed"] = a.seed;
    std::ofstream of(a.out_dir + "/oracle.json");
    of << oracle.dump(2) << '\n';

    std::cout << "wrote " << a.out_dir << "/responses.csv (" << a.n << " x " << a.d << ")\n";
    return 0;
}

int run_cluster(const std::string& matrix_path, std::uint64_t tie_seed, double a_prime,
                const std::string& out_path) {
    const crowd::ResponseMatrix Y = crowd::read_matrix_csv(matrix_path);
    const crowd::ClusterResult res = crowd::cluster_tasks(Y, tie_seed);
    const bool cluster = crowd::should_cluster(res.summary, Y.workers(), Y.tasks(), a_prime);

    std::cout << "lambda1=" << crowd::format_double(res.summary.lambda1)
              << " lambda2=" << crowd::format_double(res.summary.lambda2)
              << " mu_hat=" << crowd::format_double(res.summary.mu_hat) << '\n';
    std::cout << "detection_statistic=" << crowd::format_double(res.summary.detect_stat)
              << " should_cluster=" << (cluster ? "yes" : "no")
              << (res.no_separation ? " (no separation)" : "") << '\n';
    for (std::size_t j = 0; j < Y.tasks(); ++j) {
        if (j) std::cout << ',';
        std::cout << static_cast<int>(res.assignment[j]);
    }
    std::cout << '\n';

    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << "task,type\n";
        for (std::size_t j = 0; j < Y.tasks(); ++j)
            out << j << ',' << static_cast<int>(res.assignment[j]) << '\n';
    }
    return 0;
}

int run_aggregate(const std::string& matrix_path, const std::string& algo, bool two_stage,
                  const std::string& r_hat_csv, std::uint64_t tie_seed,
                  const std::string& detection, double a_prime, const std::string& out_path) {
    const crowd::ResponseMatrix Y = crowd::read_matrix_csv(matrix_path);
    crowd::TruthLabels labels;

    if (algo == "np") {
        if (two_stage) {
            std::cerr << "np is a single-stage aggregator; per-cluster oracle weights are "
                         "not expressible on the command line\n";
            return 1;
        }
        if (r_hat_csv.empty()) throw crowd::DataError("np aggregation needs --r-hat");
        const auto r = parse_reliabilities(r_hat_csv);
        labels = crowd::nitzan_paroush(Y, r, tie_seed).labels;
    } else if (two_stage) {
        crowd::PipelineConfig cfg;
        cfg.aggregator = crowd::aggregator_from_name(algo);
        cfg.tie_seed = tie_seed;
        cfg.detection_check = detection == "check";
        cfg.a_prime = a_prime;
        labels = crowd::run_pipeline(Y, cfg).labels;
    } else if (algo == "mv") {
        labels = crowd::majority_vote(Y, tie_seed).labels;
    } else if (algo == "er") {
        labels = crowd::er_labels(Y, tie_seed).labels;
    } else if (algo == "te") {
        labels = crowd::te_estimate(Y, tie_seed).labels;
    } else {
        throw crowd::DataError("unknown aggregator: " + algo);
    }

    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (j) std::cout << ',';
        std::cout << static_cast<int>(labels[j]);
    }
    std::cout << '\n';
    if (!out_path.empty()) write_labels_csv(out_path, labels);
    return 0;
}

int run_detect(const std::string& matrix_path, std::size_t count, double factor) {
    const crowd::ResponseMatrix Y = crowd::read_matrix_csv(matrix_path);
    const crowd::Matrix T = crowd::kernels::task_similarity(Y);
    count = std::min(count, Y.tasks());
    const std::vector<double> evals = crowd::leading_eigenvalues(T, count);
    const crowd::ClusterResult res = crowd::cluster_tasks(Y, 0);

    std::cout << "detection_statistic="
              << crowd::format_double(res.summary.detect_stat) << '\n';
    std::cout << "eigenvalues=";
    for (std::size_t i = 0; i < evals.size(); ++i) {
        if (i) std::cout << ',';
        std::cout << crowd::format_double(evals[i]);
    }
    std::cout << '\n';
    std::cout << "estimated_types=" << crowd::estimate_num_types(evals, factor) << '\n';
    return 0;
}

int run_experiment_cmd(const std::string& config_path, const std::string& out_dir) {
    const auto spec = crowd::experiments::spec_from_json_file(config_path);
    const auto table = crowd::experiments::run_experiment(spec);

    std::filesystem::create_directories(out_dir);
    std::ofstream results(out_dir + "/results.csv");
    crowd::experiments::write_results_csv(results, table);
    std::ofstream summary(out_dir + "/summary.csv");
    crowd::experiments::write_summary_csv(summary, table);
    std::ofstream meta(out_dir + "/meta.json");
    crowd::experiments::write_meta_json(meta, spec, table);

    std::cout << "wrote " << table.rows.size() << " rows to " << out_dir << "/results.csv\n";
    return 0;
}

struct BoundsArgs {
    std::string op;
    std::string r_csv, r1_csv, r2_csv, w_csv;
    double gamma = 2.0, delta = 1.0, A = 512.0, C = 1.0, tol = 1e-9;
    std::size_t n = 0, d = 200;
};

int run_bounds(const BoundsArgs& a) {
    json out;
    if (a.op == "phi") {
        const auto r = parse_reliabilities(a.r_csv);
        const auto w = a.w_csv.empty() ? crowd::log_odds_weights(r) : parse_doubles(a.w_csv);
        const auto rep = crowd::vote_exponent(w, r, a.tol);
        out["phi"] = rep.value;
        out["t_star"] = rep.t_star;
    } else if (a.op == "Phi") {
        out["Phi"] = crowd::optimal_exponent(parse_reliabilities(a.r_csv));
    } else if (a.op == "mismatch") {
        const auto rep = crowd::mismatch_exponent(parse_reliabilities(a.r1_csv),
                                                  parse_reliabilities(a.r2_csv), a.tol);
        out["phi_mismatch"] = rep.value;
        out["t_star"] = rep.t_star;
    } else if (a.op == "wmv-bound") {
        const auto r1 = parse_reliabilities(a.r1_csv);
        const auto r2 = parse_reliabilities(a.r2_csv);
        const auto w = a.w_csv.empty() ? crowd::log_odds_weights(r1) : parse_doubles(a.w_csv);
        const std::size_t n = a.n ? a.n : r1.size();
        out["upper_bound"] = crowd::vote_error_upper_bound(w, r1, r2, n, a.tol);
    } else if (a.op == "cluster-bound") {
        const auto b = crowd::clustering_error_bound(a.gamma, a.delta, a.n ? a.n : 50, a.d, a.A);
        out["bound"] = b.value;
        out["inseparable"] = b.inseparable;
    } else if (a.op == "worker-req") {
        const auto req = crowd::worker_requirement(a.gamma, a.delta, a.d, a.C);
        if (req.infinite)
            out["workers"] = "inf";
        else
            out["workers"] = req.count;
    } else if (a.op == "exact-error") {
        const auto r = parse_reliabilities(a.r_csv);
        const auto w = a.w_csv.empty() ? std::vector<double>(r.size(), 1.0) : parse_doubles(a.w_csv);
        out["exact_error"] = crowd::exact_vote_error(w, r);
    } else {
        throw crowd::DataError("unknown bounds op: " + a.op);
    }
    std::cout << out.dump() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-type crowdsourced label aggregation toolkit"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic response bundle");
    simulate->add_option("--n", sim.n, "workers");
    simulate->add_option("--d", sim.d, "tasks");
    simulate->add_option("--seed", sim.seed, "seed");
    simulate->add_option("--prior", sim.prior, "P(y = +1)");
    simulate->add_option("--r1", sim.r1_spec, "type-1 reliability range lo:hi");
    simulate->add_option("--r2", sim.r2_spec, "type-2 reliability range lo:hi (default: same as r1)");
    simulate->add_option("--out-dir", sim.out_dir, "output directory");

    std::string matrix_path, out_path, algo = "te", r_hat_csv, detection = "always";
    std::uint64_t tie_seed = 0;
    double a_prime = 1.0;
    bool two_stage = false;

    auto* cluster = app.add_subcommand("cluster", "Cluster tasks by difficulty type");
    cluster->add_option("--matrix", matrix_path, "dense response matrix CSV")->required();
    cluster->add_option("--tie-seed", tie_seed, "tie-break seed");
    cluster->add_option("--a-prime", a_prime, "detection constant");
    cluster->add_option("--out", out_path, "assignment CSV path");

    auto* aggregate = app.add_subcommand("aggregate", "Infer labels with one aggregator");
    aggregate->add_option("--matrix", matrix_path, "dense response matrix CSV")->required();
    aggregate->add_option("--algo", algo, "mv|np|er|te");
    aggregate->add_flag("--two-stage", two_stage, "cluster first, aggregate per cluster");
    aggregate->add_option("--r-hat", r_hat_csv, "reliabilities for np (comma separated)");
    aggregate->add_option("--tie-seed", tie_seed, "tie-break seed");
    aggregate->add_option("--detection", detection, "always|check (two-stage only)");
    aggregate->add_option("--a-prime", a_prime, "detection constant");
    aggregate->add_option("--out", out_path, "label CSV path");

    std::size_t eig_count = 8;
    double factor = 4.0;
    auto* detect = app.add_subcommand("detect", "Detection statistic and type count");
    detect->add_option("--matrix", matrix_path, "dense response matrix CSV")->required();
    detect->add_option("--count", eig_count, "leading eigenvalues to compute");
    detect->add_option("--factor", factor, "dominance factor");

    std::string config_path, exp_out = "results";
    auto* experiment = app.add_subcommand("experiment", "Run an experiment config");
    experiment->add_option("--config", config_path, "JSON experiment spec")->required();
    experiment->add_option("--out-dir", exp_out, "output directory");

    BoundsArgs bounds;
    auto* bounds_cmd = app.add_subcommand("bounds", "Theory calculators");
    bounds_cmd->add_option("--op", bounds.op, "phi|Phi|mismatch|wmv-bound|cluster-bound|worker-req|exact-error")
        ->required();
    bounds_cmd->add_option("--r", bounds.r_csv, "reliabilities");
    bounds_cmd->add_option("--r1", bounds.r1_csv, "type-1 reliabilities");
    bounds_cmd->add_option("--r2", bounds.r2_csv, "type-2 reliabilities");
    bounds_cmd->add_option("--w", bounds.w_csv, "weights");
    bounds_cmd->add_option("--gamma", bounds.gamma, "eigenvector magnitude ratio");
    bounds_cmd->add_option("--delta", bounds.delta, "eigen-gap");
    bounds_cmd->add_option("--A", bounds.A, "bound constant");
    bounds_cmd->add_option("--C", bounds.C, "requirement constant");
    bounds_cmd->add_option("--n", bounds.n, "workers");
    bounds_cmd->add_option("--d", bounds.d, "tasks");
    bounds_cmd->add_option("--tol", bounds.tol, "search tolerance");

    try {
        app.parse(argc, argv);
        if (*simulate) return run_simulate(sim);
        if (*cluster) return run_cluster(matrix_path, tie_seed, a_prime, out_path);
        if (*aggregate)
            return run_aggregate(matrix_path, algo, two_stage, r_hat_csv, tie_seed, detection,
                                 a_prime, out_path);
        if (*detect) return run_detect(matrix_path, eig_count, factor);
        if (*experiment) return run_experiment_cmd(config_path, exp_out);
        if (*bounds_cmd) return run_bounds(bounds);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors exit 1, --help exits 0
    } catch (const crowd::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const crowd::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
