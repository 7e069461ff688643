#include "phyauth/kernel.hpp"

#include <algorithm>

#include "phyauth/rng.hpp"

namespace phyauth {

namespace {
constexpr std::size_t kExactMedianLimit = 2000;
constexpr double kWidthFloor = 1e-6;
} // namespace

KernelParams median_heuristic_width(const std::vector<std::vector<double>>& samples,
                                    std::uint64_t seed) {
    if (samples.size() < 2)
        throw InsufficientDataError("median heuristic needs at least 2 samples");

    // Uniform subsample without replacement once the O(n^2) pair count gets
    // out of hand. Partial Fisher-Yates on an index array keeps it seeded and
    // order-independent of the caller.
    std::vector<std::size_t> idx(samples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (samples.size() > kExactMedianLimit) {
        Rng rng = Rng::substream(seed, 0x6d656469616eULL); // tag: "median"
        for (std::size_t i = 0; i < kExactMedianLimit; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.index(idx.size() - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(kExactMedianLimit);
    }

    std::vector<double> dists;
    dists.reserve(idx.size() * (idx.size() - 1) / 2);
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
            dists.push_back(std::sqrt(squared_distance(samples[idx[a]], samples[idx[b]])));
        }
    }

    std::sort(dists.begin(), dists.end());
    const std::size_t m = dists.size();
    double median = (m % 2 == 1) ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
    median = std::max(median, kWidthFloor);
    return KernelParams{median};
}

} // namespace phyauth
