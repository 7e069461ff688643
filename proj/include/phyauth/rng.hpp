#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace phyauth {

// splitmix64 finalizer; used to derive independent substream seeds from a
// (seed, stream-id) pair so that parallel workers get reproducible,
// non-overlapping streams.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

// Deterministic random source. mt19937_64 is fully specified by the standard;
// the distributions below are implemented by hand (Box-Muller for normals)
// instead of <random> distributions, whose algorithms are
// implementation-defined. Same seed therefore means the same draw sequence on
// every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static Rng substream(std::uint64_t seed, std::uint64_t stream) {
        return Rng(substream_seed(seed, stream));
    }

    // [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        const double u1 = 1.0 - uniform01(); // (0, 1], keeps log finite
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double std_dev) {
        return mean + std_dev * normal();
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Uniform integer in [0, n); n must be > 0.
    std::uint64_t index(std::uint64_t n) {
        // Rejection-free modulo is biased for huge n; n here is sample counts,
        // far below 2^53, so scaling a uniform is exact enough and portable.
        std::uint64_t i = static_cast<std::uint64_t>(uniform01() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace phyauth
