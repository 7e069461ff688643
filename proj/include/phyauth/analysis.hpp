#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "phyauth/errors.hpp"
#include "phyauth/klms.hpp"
#include "phyauth/phy_sim.hpp"

namespace phyauth {

// Probability law discretized on a uniform lattice. Bin i covers
// [lo + i*w, lo + (i+1)*w); mass is read at bin centers and CDFs are
// piecewise linear within bins. All operations preserve total mass.
class DiscretizedDistribution {
public:
    DiscretizedDistribution(double support_lo, double bin_width, std::vector<double> pmf);

    static DiscretizedDistribution point_mass(double x, double width = 1e-12);
    static DiscretizedDistribution gaussian(double mean, double std_dev, int bins,
                                            double tail_sigmas = 6.0);
    static DiscretizedDistribution uniform(double lo, double hi, int bins);
    static DiscretizedDistribution from_samples(const std::vector<double>& samples, int bins,
                                                double lo, double hi);

    double support_lo() const { return lo_; }
    double support_hi() const { return lo_ + width_ * static_cast<double>(pmf_.size()); }
    double bin_width() const { return width_; }
    const std::vector<double>& pmf() const { return pmf_; }
    std::size_t bins() const { return pmf_.size(); }
    double center(std::size_t i) const { return lo_ + width_ * (static_cast<double>(i) + 0.5); }

    double total_mass() const;
    double cdf(double x) const;
    double mean() const;
    double variance() const;

    // y = scale * x + shift; exact on the lattice (bins reverse for scale < 0).
    DiscretizedDistribution affine(double scale, double shift) const;
    DiscretizedDistribution negated() const { return affine(-1.0, 0.0); }

    // Mass outside [lo, hi] moved onto the boundary bins.
    DiscretizedDistribution clamped(double lo, double hi) const;

    // Proportional-overlap rebinning onto the given lattice; mass outside the
    // target range is folded into the edge bins.
    DiscretizedDistribution resampled(double target_lo, double target_width,
                                      std::size_t target_bins) const;

    void validate() const; // nonnegative pmf, total mass 1 within 1e-9

private:
    double lo_;
    double width_;
    std::vector<double> pmf_;
};

// Exact lattice convolution; both inputs must share the bin width (use
// convolve_sum for mixed-width term lists).
DiscretizedDistribution convolve(const DiscretizedDistribution& a,
                                 const DiscretizedDistribution& b);

// Law of the sum of independent terms. Terms are first rebinned to the widest
// bin width present, then folded left to right; lattice convolution is exact,
// so any permutation of the terms yields the same law up to rounding.
DiscretizedDistribution convolve_sum(const std::vector<DiscretizedDistribution>& terms);

// 0.5 * sum |pa - pb| after rebinning both laws onto a common lattice.
double total_variation(const DiscretizedDistribution& a, const DiscretizedDistribution& b,
                       std::size_t comparison_bins = 256);

// Law of (center - X)^2 for X ~ feature_law.
DiscretizedDistribution squared_deviation_law(const DiscretizedDistribution& feature_law,
                                              double center, int bins);

// Law of one kernel-expansion term alpha * exp(-sum_i (stored_i - X_i)^2 / (2 sigma^2))
// for independent X_i ~ feature_laws[i].
DiscretizedDistribution kernel_term_distribution(double alpha, const std::vector<double>& stored,
                                                 const std::vector<DiscretizedDistribution>& feature_laws,
                                                 double sigma, int bins);

// Law of the full model output at a random test feature with independent
// per-attribute laws.
DiscretizedDistribution score_sum_distribution(const ModelState& model,
                                               const std::vector<DiscretizedDistribution>& feature_laws,
                                               int bins);

// Analytic false-alarm rate: P(|score| <= nu) under the legitimate-transmitter
// feature laws, evaluated as F(nu) - F(-nu) of the convolved term sum.
double analytic_fa(const ModelState& model,
                   const std::vector<DiscretizedDistribution>& phi0_laws, double nu,
                   int bins = 4096);

// Analytic misdetection rate: P(|1 - score| <= nu) under the adversary feature
// laws, evaluated as F(1 + nu) - F(1 - nu).
double analytic_md(const ModelState& model,
                   const std::vector<DiscretizedDistribution>& phi1_laws, double nu,
                   int bins = 4096);

// Law of one normalized feature component under the legitimate hypothesis:
// the tau-tick drift increment plus the two estimation noises, affinely
// mapped onto [-1, 1] and clamped. Only Static and GaussianRandomWalk drift
// have a closed increment law here; other kinds raise ParameterError.
DiscretizedDistribution phi0_feature_law(const AttributeChannel& channel, int tau, int bins);

// Same machinery under the adversary hypothesis, with the legitimate-minus-
// adversary true-value law (natural units) in place of the drift increment.
DiscretizedDistribution phi1_feature_law(const AttributeChannel& channel,
                                         const DiscretizedDistribution& eve_offset_law, int bins);

struct HypothesisLaws {
    std::vector<DiscretizedDistribution> phi0;
    std::vector<DiscretizedDistribution> phi1;
};

// Per-attribute feature laws conditioned on a frozen environment state (the
// adversary offset uses the legitimate device's current true values).
HypothesisLaws feature_laws_for(const ScenarioConfig& cfg, const Environment& frozen, int bins);

struct ErrorRateReport {
    double analytic_fa = std::numeric_limits<double>::quiet_NaN();
    double analytic_md = std::numeric_limits<double>::quiet_NaN();
    double mc_fa = std::numeric_limits<double>::quiet_NaN(); // P(|score| <= nu | legit)
    double mc_md = std::numeric_limits<double>::quiet_NaN(); // P(|1-score| <= nu | adversary)
    double op_fa = std::numeric_limits<double>::quiet_NaN(); // operating rule: P(reject | legit)
    double op_md = std::numeric_limits<double>::quiet_NaN(); // operating rule: P(accept | adversary)
    double nu = 0.0;
    long model_entries = 0;
    int grid_bins = 0;
    long mc_trials = 0;
    std::uint64_t seed = 0;
};

// Model outputs over `trials` independent authentication events branched from
// the same frozen environment state, under the requested hypothesis.
std::vector<double> frozen_trial_scores(const ModelState& model, const ScenarioConfig& cfg,
                                        const Environment& frozen, bool eve, long trials,
                                        std::uint64_t seed, int jobs = 1);

// Monte Carlo estimate of the acceptance-interval events for a frozen model,
// branching every trial from the same frozen environment state. Fills the mc_*
// and op_* fields.
ErrorRateReport monte_carlo_rates(const ModelState& model, const ScenarioConfig& cfg,
                                  const Environment& frozen, double nu, long trials,
                                  std::uint64_t seed, int jobs = 1);

// Convenience: fresh environment from cfg.seed (no conditioning history).
ErrorRateReport monte_carlo_rates(const ModelState& model, const ScenarioConfig& cfg, double nu,
                                  long trials);

// Analytic and Monte Carlo rates side by side for the same frozen state.
ErrorRateReport validate_rates(const ModelState& model, const ScenarioConfig& cfg,
                               const Environment& frozen, double nu, int bins, long trials,
                               std::uint64_t seed, int jobs = 1);

std::string report_to_json_text(const ErrorRateReport& report);
void write_reports_csv(const std::string& path, const std::vector<ErrorRateReport>& reports);

} // namespace phyauth
