#pragma once

#include <cmath>
#include <vector>

#include "phyauth/errors.hpp"

namespace phyauth {

enum class Verdict { Alice, Eve };

// Decision on one authentication event. The trained model outputs ~1 for the
// legitimate transmitter, so the operating rule accepts when the score is
// within nu of 1.
struct Decision {
    Verdict verdict = Verdict::Eve;
    double score = 0.0;
    double threshold = 0.0;
};

inline Decision decide(double score, double nu) {
    if (!(nu >= 0.0 && nu < 1.0)) throw ParameterError("decision threshold must lie in [0,1)");
    if (!std::isfinite(score)) throw DataError("decision: non-finite score");
    Decision d;
    d.score = score;
    d.threshold = nu;
    d.verdict = std::abs(1.0 - score) <= nu ? Verdict::Alice : Verdict::Eve;
    return d;
}

// Empirical confusion counts. Merging two counts is plain addition, so
// parallel tallies can be combined in any order.
struct ConfusionCounts {
    long false_alarms = 0;  // legitimate transmitter rejected
    long misdetections = 0; // adversary accepted
    long alice_trials = 0;
    long eve_trials = 0;

    // NaN marks an undefined rate (no trials of that hypothesis).
    double fa_rate() const {
        return alice_trials ? static_cast<double>(false_alarms) / alice_trials : NAN;
    }
    double md_rate() const {
        return eve_trials ? static_cast<double>(misdetections) / eve_trials : NAN;
    }

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        false_alarms += o.false_alarms;
        misdetections += o.misdetections;
        alice_trials += o.alice_trials;
        eve_trials += o.eve_trials;
        return *this;
    }
};

struct JudgedTrial {
    Decision decision;
    bool truth_is_eve = false;
};

inline ConfusionCounts tally(const std::vector<JudgedTrial>& trials) {
    ConfusionCounts c;
    for (const auto& t : trials) {
        if (t.truth_is_eve) {
            ++c.eve_trials;
            if (t.decision.verdict == Verdict::Alice) ++c.misdetections;
        } else {
            ++c.alice_trials;
            if (t.decision.verdict == Verdict::Eve) ++c.false_alarms;
        }
    }
    return c;
}

struct SweepPoint {
    double nu = 0.0;
    double fa_rate = 0.0;
    double md_rate = 0.0;
};

// Empirical FA/MD trade-off over a threshold grid. FA(nu) is non-increasing
// and MD(nu) non-decreasing by construction of the decision rule.
std::vector<SweepPoint> sweep_threshold(const std::vector<double>& scores_alice,
                                        const std::vector<double>& scores_eve,
                                        const std::vector<double>& grid);

// Smallest grid-free threshold meeting an FA budget: the (1-budget) quantile
// of |1 - score| over legitimate trials, clipped into [0, 1).
double threshold_for_fa_budget(const std::vector<double>& scores_alice, double fa_budget);

// Area under the MD-vs-FA trade-off curve, integrating MD over FA in [0, 1]
// by the trapezoid rule with flat extrapolation beyond the swept ends.
double trade_off_area(const std::vector<SweepPoint>& sweep);

void write_sweep_csv(const std::string& path, const std::vector<SweepPoint>& sweep,
                     long alice_trials, long eve_trials);

} // namespace phyauth
