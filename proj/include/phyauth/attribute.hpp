#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "phyauth/errors.hpp"

namespace phyauth {

// One physical-layer attribute. [range_lo, range_hi] is the nominal range of
// the two-phase estimate *difference* for this attribute; it is what the
// normalization below maps onto [-1, 1].
struct AttributeSpec {
    std::string name;
    double range_lo = -1.0;
    double range_hi = 1.0;

    void validate() const {
        if (name.empty()) throw ParameterError("attribute name must be non-empty");
        if (!std::isfinite(range_lo) || !std::isfinite(range_hi))
            throw ParameterError("attribute '" + name + "': range must be finite");
        if (!(range_lo < range_hi))
            throw ParameterError("attribute '" + name + "': range_lo must be < range_hi");
    }

    double midpoint() const { return 0.5 * (range_lo + range_hi); }
    double span() const { return range_hi - range_lo; }

    // Same midpoint, span multiplied by `factor`. Models a deliberately
    // over-estimated nominal range.
    AttributeSpec widened(double factor) const {
        if (!(factor > 0.0)) throw ParameterError("widening factor must be positive");
        AttributeSpec w = *this;
        const double mid = midpoint();
        const double half = 0.5 * span() * factor;
        w.range_lo = mid - half;
        w.range_hi = mid + half;
        return w;
    }
};

inline void validate_attribute_set(const std::vector<AttributeSpec>& specs) {
    std::unordered_set<std::string> seen;
    for (const auto& s : specs) {
        s.validate();
        if (!seen.insert(s.name).second)
            throw ParameterError("duplicate attribute name '" + s.name + "'");
    }
}

enum class Phase { I, II };

// Estimate of all N attributes taken in one protocol phase.
struct EstimateVector {
    std::vector<double> values; // one per attribute, natural units
    Phase phase = Phase::I;
    long time_index = 0;
};

// Training/test pair: normalized attribute differences plus the transmitter
// label (1 = legitimate, 0 = adversary).
struct NormalizedSample {
    std::vector<double> features; // each in [-1, 1]
    double label = 1.0;
};

// Per-attribute count of normalized components that fell outside [-1, 1] and
// were clamped; surfaced in experiment reports.
struct ClampCounters {
    std::vector<long long> clamped;

    void ensure_size(std::size_t n) {
        if (clamped.size() < n) clamped.resize(n, 0);
    }
    long long total() const {
        long long t = 0;
        for (long long c : clamped) t += c;
        return t;
    }
};

// Difference of the two phase estimates, h_n = first_n - second_n.
inline std::vector<double> diff(const EstimateVector& first, const EstimateVector& second) {
    if (first.phase != Phase::I || second.phase != Phase::II)
        throw ProtocolError("diff expects a phase-I estimate followed by a phase-II estimate");
    if (first.values.size() != second.values.size())
        throw DimensionError("diff: estimate lengths differ");
    std::vector<double> h(first.values.size());
    for (std::size_t n = 0; n < h.size(); ++n) h[n] = first.values[n] - second.values[n];
    return h;
}

// Affine map of each component onto [-1, 1] given its nominal range; no clamping.
inline std::vector<double> normalize_raw(const std::vector<double>& h,
                                         const std::vector<AttributeSpec>& specs) {
    if (h.size() != specs.size()) throw DimensionError("normalize: value/spec count mismatch");
    std::vector<double> out(h.size());
    for (std::size_t n = 0; n < h.size(); ++n) {
        const auto& s = specs[n];
        out[n] = 2.0 / s.span() * (h[n] - s.midpoint());
    }
    return out;
}

// Normalization with out-of-range components clamped to the boundary. Clamps
// are counted per attribute when `counters` is given; the kernel stays bounded
// and the step-size stability bound stays valid under clamping.
inline std::vector<double> normalize(const std::vector<double>& h,
                                     const std::vector<AttributeSpec>& specs,
                                     ClampCounters* counters = nullptr) {
    std::vector<double> out = normalize_raw(h, specs);
    if (counters) counters->ensure_size(out.size());
    for (std::size_t n = 0; n < out.size(); ++n) {
        if (out[n] < -1.0 || out[n] > 1.0) {
            out[n] = std::clamp(out[n], -1.0, 1.0);
            if (counters) counters->clamped[n]++;
        }
    }
    return out;
}

// Inverse of normalize_raw for in-range values.
inline std::vector<double> denormalize(const std::vector<double>& normalized,
                                       const std::vector<AttributeSpec>& specs) {
    if (normalized.size() != specs.size())
        throw DimensionError("denormalize: value/spec count mismatch");
    std::vector<double> out(normalized.size());
    for (std::size_t n = 0; n < out.size(); ++n) {
        const auto& s = specs[n];
        out[n] = normalized[n] * 0.5 * s.span() + s.midpoint();
    }
    return out;
}

} // namespace phyauth
