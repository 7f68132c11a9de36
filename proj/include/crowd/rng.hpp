#pragma once

#include <cstdint>

namespace crowd {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen because the algorithm is a
// published fixed-point mix: any implementation of this library on any
// platform reproduces the same stream from the same seed. The generator is
// cheap to seed, so every sampling site owns a private stream derived from
// (user seed, stream tag) and never shares mutable state.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_unit() < p; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Uniform integer in [0, n). n must be positive. Uses rejection so the
    // result is unbiased and reproducible.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }

private:
    std::uint64_t state_;
};

// One round of the SplitMix64 output mix; used as a stateless hash.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and a tag.
// Defined as mix64(base + mix64(tag + golden)) so substreams are stable
// across builds and platforms.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    return mix64(base + mix64(tag + 0x9e3779b97f4a7c15ULL));
}

// Stream tags. Fixed constants, part of the reproducibility contract.
namespace stream {
inline constexpr std::uint64_t kTruth = 1;
inline constexpr std::uint64_t kResponses = 2;
inline constexpr std::uint64_t kTies = 3;
inline constexpr std::uint64_t kSplit = 4;
inline constexpr std::uint64_t kImpute = 5;
inline constexpr std::uint64_t kConstruction = 6;
inline constexpr std::uint64_t kEigenStart = 7;
}  // namespace stream

}  // namespace crowd
