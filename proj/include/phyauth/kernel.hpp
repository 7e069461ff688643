#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "phyauth/errors.hpp"

namespace phyauth {

struct KernelParams {
    double width = 1.0; // sigma, in normalized-feature units

    void validate() const {
        if (!std::isfinite(width) || width <= 0.0)
            throw ParameterError("kernel width must be positive and finite");
    }
};

inline double squared_distance(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionError("squared_distance: length mismatch");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        d2 += d * d;
    }
    return d2;
}

// exp(-||x - y||^2 / (2 sigma^2)), in (0, 1]. Squared distance is accumulated
// first and a single exponential taken, so results are bit-stable.
inline double gaussian_kernel(const std::vector<double>& x, const std::vector<double>& y,
                              const KernelParams& params) {
    params.validate();
    return std::exp(-squared_distance(x, y) / (2.0 * params.width * params.width));
}

// sigma = median of all pairwise Euclidean distances. Exact for up to 2000
// samples; beyond that a seeded uniform subsample of 2000 is used. Floored at
// 1e-6 so degenerate (all-identical) sample sets stay usable.
KernelParams median_heuristic_width(const std::vector<std::vector<double>>& samples,
                                    std::uint64_t seed = 0);

// Config-level kernel width choice: a fixed positive number or the median
// heuristic ("median" in config files).
struct WidthConfig {
    bool use_median = true;
    double fixed = 1.0;

    static WidthConfig median() { return WidthConfig{true, 1.0}; }
    static WidthConfig value(double sigma) { return WidthConfig{false, sigma}; }

    KernelParams resolve(const std::vector<std::vector<double>>& samples,
                         std::uint64_t seed) const {
        if (!use_median) {
            KernelParams p{fixed};
            p.validate();
            return p;
        }
        return median_heuristic_width(samples, seed);
    }
};

} // namespace phyauth
