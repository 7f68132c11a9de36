#include "crowd/model.hpp"

#include "crowd/rng.hpp"

namespace crowd {

TruthLabels sample_truth(std::size_t d, double positive_prior, std::uint64_t seed) {
    if (d < 1) throw DataError("need at least one task");
    if (!(positive_prior >= 0.0 && positive_prior <= 1.0))
        throw DataError("positive prior must lie in [0, 1]");
    SplitMix64 rng(derive_seed(seed, stream::kTruth));
    TruthLabels out;
    out.y.resize(d);
    for (std::size_t j = 0; j < d; ++j)
        out.y[j] = rng.bernoulli(positive_prior) ? std::int8_t{1} : std::int8_t{-1};
    return out;
}

ResponseMatrix sample_responses(const TwoTypeModel& model) {
    model.validate();
    const std::size_t n = model.workers(), d = model.tasks();
    SplitMix64 rng(derive_seed(model.seed, stream::kResponses));
    ResponseMatrix Y(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double r = model.typeOf[j] == 1 ? model.r1[i] : model.r2[i];
            const bool correct = rng.bernoulli((1.0 + r) / 2.0);
            Y.entry(i, j) = correct ? model.y[j] : static_cast<std::int8_t>(-model.y[j]);
        }
    }
    return Y;
}

Simulation simulate(const TwoTypeModel& model) {
    Simulation s;
    s.responses = sample_responses(model);
    s.oracle = OracleRecord{model.y, model.typeOf, model.r1, model.r2};
    return s;
}

}  // namespace crowd
