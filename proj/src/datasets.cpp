#include "crowd/datasets.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "crowd/io.hpp"
#include "crowd/rng.hpp"

namespace crowd {

namespace {

int parse_label(const std::string& s, const std::string& where) {
    try {
        const int v = std::stoi(s);
        if (v == -1 || v == 0 || v == 1) return v;
    } catch (const std::exception&) {
    }
    throw DataError("bad label '" + s + "' in " + where);
}

// Maps a {0,1} label scheme onto {-1,+1}; {-1,+1} passes through.
std::int8_t map_label(int v, bool zero_one) {
    if (zero_one) return v == 0 ? std::int8_t{-1} : std::int8_t{1};
    return static_cast<std::int8_t>(v);
}

}  // namespace

DatasetBundle load_dataset(const std::string& responses_path, const std::string& truth_path) {
    const auto resp_rows = read_csv_rows(responses_path);
    const auto truth_rows = read_csv_rows(truth_path);
    if (resp_rows.empty()) throw DataError("no response rows in " + responses_path);

    // Optional header: skip a first row whose label field is not numeric.
    auto is_header = [](const std::vector<std::string>& row) {
        try {
            (void)std::stoi(row.back());
            return false;
        } catch (const std::exception&) {
            return true;
        }
    };

    struct Triple {
        std::string worker, task;
        int label;
    };
    std::vector<Triple> triples;
    bool any_negative = false, any_zero = false;
    for (std::size_t idx = 0; idx < resp_rows.size(); ++idx) {
        const auto& row = resp_rows[idx];
        if (idx == 0 && is_header(row)) continue;
        if (row.size() != 3)
            throw DataError("response rows must be worker_id,task_id,label in " + responses_path);
        const int v = parse_label(row[2], responses_path);
        any_negative |= v == -1;
        any_zero |= v == 0;
        triples.push_back(Triple{row[0], row[1], v});
    }

    struct TruthRow {
        std::string task;
        int label;
    };
    std::vector<TruthRow> truths;
    for (std::size_t idx = 0; idx < truth_rows.size(); ++idx) {
        const auto& row = truth_rows[idx];
        if (idx == 0 && is_header(row)) continue;
        if (row.size() != 2)
            throw DataError("truth rows must be task_id,label in " + truth_path);
        const int v = parse_label(row[1], truth_path);
        any_negative |= v == -1;
        any_zero |= v == 0;
        truths.push_back(TruthRow{row[0], v});
    }

    // Label scheme is decided jointly across both files.
    if (any_negative && any_zero)
        throw DataError("mixed {-1,+1} and {0,1} label schemes in " + responses_path);
    const bool zero_one = any_zero;

    std::map<std::string, std::size_t> worker_index, task_index;
    std::vector<std::string> worker_ids, task_ids;
    for (const auto& t : triples) {
        if (worker_index.emplace(t.worker, worker_ids.size()).second)
            worker_ids.push_back(t.worker);
        if (task_index.emplace(t.task, task_ids.size()).second) task_ids.push_back(t.task);
    }

    DatasetBundle b;
    b.raw = ResponseMatrix(worker_ids.size(), task_ids.size());
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::vector<std::string> duplicates;
    for (const auto& t : triples) {
        const std::size_t i = worker_index[t.worker], j = task_index[t.task];
        if (!seen.emplace(i, j).second)
            duplicates.push_back("(" + t.worker + "," + t.task + ")");
        b.raw.entry(i, j) = map_label(t.label, zero_one);
    }
    if (!duplicates.empty()) {
        std::string msg = "duplicate (worker,task) pairs:";
        for (const auto& d : duplicates) msg += " " + d;
        throw DataError(msg);
    }

    b.truth.y.assign(task_ids.size(), 0);
    std::vector<bool> have_truth(task_ids.size(), false);
    for (const auto& t : truths) {
        const auto it = task_index.find(t.task);
        if (it == task_index.end())
            throw DataError("truth file references unknown task '" + t.task + "'");
        b.truth.y[it->second] = map_label(t.label, zero_one);
        have_truth[it->second] = true;
    }
    for (std::size_t j = 0; j < task_ids.size(); ++j)
        if (!have_truth[j])
            throw DataError("no truth label for task '" + task_ids[j] + "'");

    b.worker_ids = std::move(worker_ids);
    b.task_ids = std::move(task_ids);
    b.source = responses_path;
    b.processing.push_back("loaded " + std::to_string(b.raw.workers()) + " workers x " +
                           std::to_string(b.raw.tasks()) + " tasks");
    return b;
}

ImputedDataset impute_dataset(const DatasetBundle& bundle, std::size_t min_labels,
                              std::uint64_t seed) {
    const std::size_t d = bundle.raw.tasks();
    if (bundle.truth.size() != d) throw DataError("truth length must match task count");

    // 1. Drop sparse workers.
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < bundle.raw.workers(); ++i) {
        std::size_t count = 0;
        for (std::size_t j = 0; j < d; ++j) count += bundle.raw.entry(i, j) != 0;
        if (count > min_labels) kept.push_back(i);
    }
    if (kept.size() < 3) throw DataError("fewer than 3 workers left after the response filter");

    ImputedDataset out;
    out.dropped_workers = bundle.raw.workers() - kept.size();
    for (std::size_t i : kept) out.kept_worker_ids.push_back(bundle.worker_ids.empty()
                                                                 ? std::to_string(i)
                                                                 : bundle.worker_ids[i]);
    const ResponseMatrix Y = select_workers(bundle.raw, kept);
    const std::size_t n = Y.workers();

    // 2. Task difficulty scores: fraction of correct responses.
    std::vector<double> score(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        std::size_t responses = 0, correct = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::int8_t e = Y.entry(i, j);
            if (e == 0) continue;
            ++responses;
            correct += e == bundle.truth[j];
        }
        score[j] = responses ? static_cast<double>(correct) / static_cast<double>(responses)
                             : 0.0;
    }

    // 3. Rank split: top half type 1, ties by task index, odd count's extra
    // task goes to type 1.
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    out.types.k.assign(d, 2);
    const std::size_t d1 = (d + 1) / 2;
    for (std::size_t rank = 0; rank < d1; ++rank) out.types.k[order[rank]] = 1;

    // 4. Empirical per-type reliabilities from observed entries.
    out.r1.r.assign(n, 0.0);
    out.r2.r.assign(n, 0.0);
    bool type_responded[2] = {false, false};
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t cnt[2] = {0, 0}, cor[2] = {0, 0};
        for (std::size_t j = 0; j < d; ++j) {
            const std::int8_t e = Y.entry(i, j);
            if (e == 0) continue;
            const std::size_t k = out.types[j] - 1;
            ++cnt[k];
            cor[k] += e == bundle.truth[j];
        }
        for (int k = 0; k < 2; ++k) {
            if (cnt[k]) type_responded[k] = true;
            const double r =
                cnt[k] ? 2.0 * static_cast<double>(cor[k]) / static_cast<double>(cnt[k]) - 1.0
                       : 0.0;
            (k == 0 ? out.r1 : out.r2).r[i] = r;
        }
    }
    if (!type_responded[0] || !type_responded[1]) throw DataError("degenerate split");

    out.params = spectral_params_from_reliabilities(out.r1, out.r2, d);

    // 5. Fill the missing entries, worker-major, never touching observations.
    out.dense = Y;
    SplitMix64 rng(derive_seed(seed, stream::kImpute));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            if (out.dense.entry(i, j) != 0) continue;
            const double r = out.types[j] == 1 ? out.r1[i] : out.r2[i];
            const bool correct = rng.bernoulli((1.0 + r) / 2.0);
            out.dense.entry(i, j) =
                correct ? bundle.truth[j] : static_cast<std::int8_t>(-bundle.truth[j]);
            ++out.imputed_entries;
        }
    }
    return out;
}

}  // namespace crowd
