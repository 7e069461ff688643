#include "phyauth/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "phyauth/csv.hpp"
#include "phyauth/parallel.hpp"
#include "phyauth/rng.hpp"

namespace phyauth {

namespace {

constexpr double kMassTolerance = 1e-9;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Deposit mass at a point value with linear splitting between the two nearest
// bin centers; first-order accurate and mass preserving.
void deposit(std::vector<double>& pmf, double lo, double width, double value, double mass) {
    if (mass == 0.0) return;
    const double pos = (value - lo) / width - 0.5; // fractional center index
    if (pos <= 0.0) {
        pmf.front() += mass;
        return;
    }
    if (pos >= static_cast<double>(pmf.size() - 1)) {
        pmf.back() += mass;
        return;
    }
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    pmf[i] += mass * (1.0 - frac);
    pmf[i + 1] += mass * frac;
}

} // namespace

// ---------------------------------------------------------------------------
// DiscretizedDistribution
// ---------------------------------------------------------------------------

DiscretizedDistribution::DiscretizedDistribution(double support_lo, double bin_width,
                                                 std::vector<double> pmf)
    : lo_(support_lo), width_(bin_width), pmf_(std::move(pmf)) {
    if (!(width_ > 0.0) || !std::isfinite(width_) || !std::isfinite(lo_))
        throw ParameterError("distribution: bin width must be positive and finite");
    if (pmf_.empty()) throw ParameterError("distribution: empty pmf");
}

DiscretizedDistribution DiscretizedDistribution::point_mass(double x, double width) {
    return DiscretizedDistribution(x - 0.5 * width, width, {1.0});
}

DiscretizedDistribution DiscretizedDistribution::gaussian(double mean, double std_dev, int bins,
                                                          double tail_sigmas) {
    if (std_dev < 0.0) throw ParameterError("gaussian law: std must be >= 0");
    if (std_dev == 0.0) return point_mass(mean);
    if (bins < 2) throw ParameterError("gaussian law: need at least 2 bins");
    const double lo = mean - tail_sigmas * std_dev;
    const double width = 2.0 * tail_sigmas * std_dev / static_cast<double>(bins);
    std::vector<double> pmf(static_cast<std::size_t>(bins));
    double prev = normal_cdf(-tail_sigmas);
    double total = 0.0;
    for (int i = 0; i < bins; ++i) {
        const double edge = lo + width * static_cast<double>(i + 1);
        const double next = normal_cdf((edge - mean) / std_dev);
        pmf[static_cast<std::size_t>(i)] = next - prev;
        total += next - prev;
        prev = next;
    }
    for (double& p : pmf) p /= total; // fold the truncated tails back in
    return DiscretizedDistribution(lo, width, std::move(pmf));
}

DiscretizedDistribution DiscretizedDistribution::uniform(double lo, double hi, int bins) {
    if (!(lo < hi)) throw ParameterError("uniform law: lo must be < hi");
    if (bins < 1) throw ParameterError("uniform law: need at least 1 bin");
    std::vector<double> pmf(static_cast<std::size_t>(bins), 1.0 / static_cast<double>(bins));
    return DiscretizedDistribution(lo, (hi - lo) / static_cast<double>(bins), std::move(pmf));
}

DiscretizedDistribution DiscretizedDistribution::from_samples(const std::vector<double>& samples,
                                                              int bins, double lo, double hi) {
    if (samples.empty()) throw InsufficientDataError("histogram needs samples");
    if (!(lo < hi)) throw ParameterError("histogram: lo must be < hi");
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<double> pmf(static_cast<std::size_t>(bins), 0.0);
    const double mass = 1.0 / static_cast<double>(samples.size());
    for (double s : samples) {
        const double clipped = std::clamp(s, lo, hi);
        std::size_t i = static_cast<std::size_t>((clipped - lo) / width);
        if (i >= pmf.size()) i = pmf.size() - 1;
        pmf[i] += mass;
    }
    return DiscretizedDistribution(lo, width, std::move(pmf));
}

double DiscretizedDistribution::total_mass() const {
    double s = 0.0;
    for (double p : pmf_) s += p;
    return s;
}

double DiscretizedDistribution::cdf(double x) const {
    if (x <= lo_) return 0.0;
    const double hi = support_hi();
    if (x >= hi) return total_mass();
    const double pos = (x - lo_) / width_;
    const std::size_t full = static_cast<std::size_t>(pos);
    double c = 0.0;
    for (std::size_t i = 0; i < full && i < pmf_.size(); ++i) c += pmf_[i];
    if (full < pmf_.size()) c += pmf_[full] * (pos - static_cast<double>(full));
    return c;
}

double DiscretizedDistribution::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < pmf_.size(); ++i) m += pmf_[i] * center(i);
    return m;
}

double DiscretizedDistribution::variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < pmf_.size(); ++i) {
        const double d = center(i) - m;
        v += pmf_[i] * d * d;
    }
    return v;
}

DiscretizedDistribution DiscretizedDistribution::affine(double scale, double shift) const {
    if (scale == 0.0) return point_mass(shift);
    if (scale > 0.0)
        return DiscretizedDistribution(scale * lo_ + shift, scale * width_, pmf_);
    std::vector<double> reversed(pmf_.rbegin(), pmf_.rend());
    return DiscretizedDistribution(scale * support_hi() + shift, -scale * width_,
                                   std::move(reversed));
}

DiscretizedDistribution DiscretizedDistribution::clamped(double lo, double hi) const {
    if (!(lo < hi)) throw ParameterError("clamp: lo must be < hi");
    if (lo_ >= lo && support_hi() <= hi) return *this;
    const double new_lo = std::max(lo_, lo);
    const double new_hi = std::min(support_hi(), hi);
    if (!(new_lo < new_hi)) {
        // All mass on one side of the window.
        return point_mass(support_hi() <= lo ? lo : hi);
    }
    // Lattice boundaries coincide with the clamp window; resampling folds the
    // outside mass into the edge bins.
    const std::size_t n = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround((new_hi - new_lo) / width_)));
    return resampled(new_lo, (new_hi - new_lo) / static_cast<double>(n), n);
}

DiscretizedDistribution DiscretizedDistribution::resampled(double target_lo, double target_width,
                                                           std::size_t target_bins) const {
    if (!(target_width > 0.0) || target_bins == 0)
        throw ParameterError("resample: invalid target lattice");
    std::vector<double> pmf(target_bins, 0.0);
    const double target_hi = target_lo + target_width * static_cast<double>(target_bins);
    for (std::size_t i = 0; i < pmf_.size(); ++i) {
        if (pmf_[i] == 0.0) continue;
        const double a = lo_ + width_ * static_cast<double>(i);
        const double b = a + width_;
        // Uniform mass within the source bin, split by overlap.
        const double clip_a = std::max(a, target_lo);
        const double clip_b = std::min(b, target_hi);
        if (clip_a >= clip_b) {
            // Entirely outside: fold into the nearest edge bin.
            pmf[b <= target_lo ? 0 : target_bins - 1] += pmf_[i];
            continue;
        }
        const double below = (clip_a - a) / width_;
        const double above = (b - clip_b) / width_;
        if (below > 0.0) pmf[0] += pmf_[i] * below;
        if (above > 0.0) pmf[target_bins - 1] += pmf_[i] * above;
        double j0 = (clip_a - target_lo) / target_width;
        double j1 = (clip_b - target_lo) / target_width;
        std::size_t ja = static_cast<std::size_t>(j0);
        std::size_t jb = std::min(static_cast<std::size_t>(j1), target_bins - 1);
        for (std::size_t j = ja; j <= jb; ++j) {
            const double seg_a = std::max(clip_a, target_lo + target_width * static_cast<double>(j));
            const double seg_b =
                std::min(clip_b, target_lo + target_width * static_cast<double>(j + 1));
            if (seg_b > seg_a) pmf[j] += pmf_[i] * (seg_b - seg_a) / width_;
        }
    }
    return DiscretizedDistribution(target_lo, target_width, std::move(pmf));
}

void DiscretizedDistribution::validate() const {
    for (double p : pmf_)
        if (p < -1e-12 || !std::isfinite(p))
            throw DataError("distribution: negative or non-finite mass");
    if (std::abs(total_mass() - 1.0) > kMassTolerance)
        throw DataError("distribution: total mass " + format_double(total_mass()) +
                        " is not 1 within 1e-9");
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

DiscretizedDistribution convolve(const DiscretizedDistribution& a,
                                 const DiscretizedDistribution& b) {
    const double w = a.bin_width();
    if (std::abs(a.bin_width() - b.bin_width()) >
        1e-12 * std::max(a.bin_width(), b.bin_width()))
        throw ParameterError("convolve: bin widths must match (use convolve_sum)");
    const std::size_t n = a.bins() + b.bins() - 1;
    std::vector<double> pmf(n, 0.0);
    const auto& pa = a.pmf();
    const auto& pb = b.pmf();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (pa[i] == 0.0) continue;
        for (std::size_t j = 0; j < pb.size(); ++j) pmf[i + j] += pa[i] * pb[j];
    }
    // Sum-of-centers lattice: center_k = a.lo + b.lo + (k + 1) * w.
    return DiscretizedDistribution(a.support_lo() + b.support_lo() + 0.5 * w, w, std::move(pmf));
}

DiscretizedDistribution convolve_sum(const std::vector<DiscretizedDistribution>& terms) {
    if (terms.empty()) throw InsufficientDataError("convolve_sum: need at least one term");
    double w = 0.0;
    for (const auto& t : terms) w = std::max(w, t.bin_width());
    std::vector<DiscretizedDistribution> aligned;
    aligned.reserve(terms.size());
    for (const auto& t : terms) {
        if (std::abs(t.bin_width() - w) <= 1e-12 * w) {
            aligned.push_back(t);
        } else {
            const double span = t.support_hi() - t.support_lo();
            const std::size_t n =
                std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / w - 1e-9)));
            // Center the wider lattice on the source support so narrow laws
            // (point masses in particular) keep their mean.
            const double slack = static_cast<double>(n) * w - span;
            aligned.push_back(t.resampled(t.support_lo() - 0.5 * slack, w, n));
        }
    }
    DiscretizedDistribution acc = aligned.front();
    for (std::size_t i = 1; i < aligned.size(); ++i) acc = convolve(acc, aligned[i]);
    return acc;
}

double total_variation(const DiscretizedDistribution& a, const DiscretizedDistribution& b,
                       std::size_t comparison_bins) {
    const double lo = std::min(a.support_lo(), b.support_lo());
    const double hi = std::max(a.support_hi(), b.support_hi());
    const double w = (hi - lo) / static_cast<double>(comparison_bins);
    const auto ra = a.resampled(lo, w, comparison_bins);
    const auto rb = b.resampled(lo, w, comparison_bins);
    double tv = 0.0;
    for (std::size_t i = 0; i < comparison_bins; ++i)
        tv += std::abs(ra.pmf()[i] - rb.pmf()[i]);
    return 0.5 * tv;
}

// ---------------------------------------------------------------------------
// Kernel-term laws
// ---------------------------------------------------------------------------

DiscretizedDistribution squared_deviation_law(const DiscretizedDistribution& feature_law,
                                              double center, int bins) {
    const double lo = feature_law.support_lo();
    const double hi = feature_law.support_hi();
    const double d_lo = center - lo;
    const double d_hi = center - hi;
    const double s_max = std::max(d_lo * d_lo, d_hi * d_hi);
    const double s_min = (lo <= center && center <= hi) ? 0.0 : std::min(d_lo * d_lo, d_hi * d_hi);
    if (!(s_max > s_min)) return DiscretizedDistribution::point_mass(s_min);
    const double width = (s_max - s_min) / static_cast<double>(bins);
    std::vector<double> pmf(static_cast<std::size_t>(bins), 0.0);
    for (std::size_t i = 0; i < feature_law.bins(); ++i) {
        const double d = center - feature_law.center(i);
        deposit(pmf, s_min, width, d * d, feature_law.pmf()[i]);
    }
    return DiscretizedDistribution(s_min, width, std::move(pmf));
}

DiscretizedDistribution kernel_term_distribution(
    double alpha, const std::vector<double>& stored,
    const std::vector<DiscretizedDistribution>& feature_laws, double sigma, int bins) {
    if (stored.size() != feature_laws.size())
        throw DimensionError("kernel term: stored input and law counts differ");
    if (!(sigma > 0.0)) throw ParameterError("kernel term: sigma must be > 0");
    if (alpha == 0.0) return DiscretizedDistribution::point_mass(0.0);

    std::vector<DiscretizedDistribution> sq_laws;
    sq_laws.reserve(stored.size());
    for (std::size_t i = 0; i < stored.size(); ++i)
        sq_laws.push_back(squared_deviation_law(feature_laws[i], stored[i], bins));
    const DiscretizedDistribution total_sq = convolve_sum(sq_laws);

    const double inv = 1.0 / (2.0 * sigma * sigma);
    const double s_lo = std::max(0.0, total_sq.support_lo());
    const double s_hi = total_sq.support_hi();
    // alpha * exp(-s * inv) is monotone in s; map bin centers and re-deposit.
    const double y_at_lo = alpha * std::exp(-s_lo * inv);
    const double y_at_hi = alpha * std::exp(-s_hi * inv);
    const double y_lo = std::min(y_at_lo, y_at_hi);
    const double y_hi = std::max(y_at_lo, y_at_hi);
    if (!(y_hi > y_lo)) return DiscretizedDistribution::point_mass(y_at_lo);
    const double width = (y_hi - y_lo) / static_cast<double>(bins);
    std::vector<double> pmf(static_cast<std::size_t>(bins), 0.0);
    for (std::size_t i = 0; i < total_sq.bins(); ++i) {
        const double s = std::max(0.0, total_sq.center(i));
        deposit(pmf, y_lo, width, alpha * std::exp(-s * inv), total_sq.pmf()[i]);
    }
    return DiscretizedDistribution(y_lo, width, std::move(pmf));
}

DiscretizedDistribution score_sum_distribution(
    const ModelState& model, const std::vector<DiscretizedDistribution>& feature_laws, int bins) {
    const auto& dict = model.dictionary();
    if (dict.empty()) return DiscretizedDistribution::point_mass(0.0);
    std::vector<DiscretizedDistribution> terms;
    terms.reserve(dict.size());
    for (std::size_t l = 0; l < dict.size(); ++l)
        terms.push_back(kernel_term_distribution(model.coefficients()[l], dict[l], feature_laws,
                                                 model.kernel().width, bins));
    return convolve_sum(terms);
}

double analytic_fa(const ModelState& model,
                   const std::vector<DiscretizedDistribution>& phi0_laws, double nu, int bins) {
    if (!(nu >= 0.0 && nu < 1.0)) throw ParameterError("analytic FA: nu must lie in [0,1)");
    const auto sum = score_sum_distribution(model, phi0_laws, bins);
    return sum.cdf(nu) - sum.cdf(-nu);
}

double analytic_md(const ModelState& model,
                   const std::vector<DiscretizedDistribution>& phi1_laws, double nu, int bins) {
    if (!(nu >= 0.0 && nu < 1.0)) throw ParameterError("analytic MD: nu must lie in [0,1)");
    const auto sum = score_sum_distribution(model, phi1_laws, bins);
    return sum.cdf(1.0 + nu) - sum.cdf(1.0 - nu);
}

// ---------------------------------------------------------------------------
// Feature laws
// ---------------------------------------------------------------------------

namespace {

DiscretizedDistribution drift_increment_law(const DriftModel& drift, int tau, int bins) {
    switch (drift.kind) {
    case DriftKind::Static:
        return DiscretizedDistribution::point_mass(0.0);
    case DriftKind::GaussianRandomWalk:
        return DiscretizedDistribution::gaussian(
            0.0, drift.walk_std * std::sqrt(static_cast<double>(tau)), bins);
    default:
        throw ParameterError("analytic feature law: unsupported drift kind");
    }
}

DiscretizedDistribution feature_law_from_parts(const AttributeChannel& channel,
                                               const DiscretizedDistribution& true_part,
                                               int bins) {
    std::vector<DiscretizedDistribution> parts;
    parts.push_back(true_part);
    if (channel.noise_std_phase1 > 0.0)
        parts.push_back(DiscretizedDistribution::gaussian(0.0, channel.noise_std_phase1, bins));
    if (channel.noise_std_phase2 > 0.0)
        parts.push_back(
            DiscretizedDistribution::gaussian(0.0, channel.noise_std_phase2, bins).negated());
    DiscretizedDistribution sum = convolve_sum(parts);
    const double scale = 2.0 / channel.spec.span();
    return sum.affine(scale, -scale * channel.spec.midpoint()).clamped(-1.0, 1.0);
}

} // namespace

DiscretizedDistribution phi0_feature_law(const AttributeChannel& channel, int tau, int bins) {
    if (bins < 64) throw ParameterError("feature law: need at least 64 bins");
    if (tau < 1) throw ParameterError("feature law: tau must be >= 1");
    // Difference of the two phase estimates sees minus the drift increment.
    return feature_law_from_parts(channel, drift_increment_law(channel.drift, tau, bins).negated(),
                                  bins);
}

DiscretizedDistribution phi1_feature_law(const AttributeChannel& channel,
                                         const DiscretizedDistribution& eve_offset_law,
                                         int bins) {
    if (bins < 64) throw ParameterError("feature law: need at least 64 bins");
    return feature_law_from_parts(channel, eve_offset_law, bins);
}

HypothesisLaws feature_laws_for(const ScenarioConfig& cfg, const Environment& frozen, int bins) {
    HypothesisLaws laws;
    const auto mask = cfg.imitation_mask();
    for (std::size_t i = 0; i < cfg.attributes.size(); ++i) {
        const AttributeChannel& ch = cfg.attributes[i];
        laws.phi0.push_back(phi0_feature_law(ch, cfg.tau, bins));
        if (mask[i]) {
            // Perfect imitation of the current value: the offset is minus the
            // drift accrued between the phases, exactly as under the
            // legitimate hypothesis.
            laws.phi1.push_back(phi1_feature_law(
                ch, drift_increment_law(ch.drift, cfg.tau, bins).negated(), bins));
        } else {
            switch (ch.drift.kind) {
            case DriftKind::Static:
            case DriftKind::GaussianRandomWalk: {
                DiscretizedDistribution offset = [&] {
                    if (ch.drift.eve_tracks_value) {
                        // Tracking adversary: value is the device's current one
                        // plus an estimation error, so the offset folds the
                        // inter-phase drift into the error law.
                        const double tau_std =
                            ch.drift.walk_std * std::sqrt(static_cast<double>(cfg.tau));
                        return DiscretizedDistribution::gaussian(
                            -ch.drift.eve_mean, std::hypot(tau_std, ch.drift.eve_std), bins);
                    }
                    return DiscretizedDistribution::gaussian(
                        frozen.walk_value(i) - ch.drift.eve_mean, ch.drift.eve_std, bins);
                }();
                laws.phi1.push_back(phi1_feature_law(ch, offset, bins));
                break;
            }
            default:
                throw ParameterError("analytic feature law: unsupported drift kind");
            }
        }
    }
    return laws;
}

// ---------------------------------------------------------------------------
// Monte Carlo rates
// ---------------------------------------------------------------------------

std::vector<double> frozen_trial_scores(const ModelState& model, const ScenarioConfig& cfg,
                                        const Environment& frozen, bool eve, long trials,
                                        std::uint64_t seed, int jobs) {
    if (trials < 1) throw ParameterError("trial scores: trials must be >= 1");
    const auto specs = cfg.specs();
    std::vector<double> scores(static_cast<std::size_t>(trials));
    parallel_chunks(trials, jobs, [&](long begin, long end) {
        for (long t = begin; t < end; ++t) {
            // Substream 2t for the legitimate hypothesis, 2t+1 for the
            // adversary, so paired estimates share nothing.
            Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(2 * t + (eve ? 1 : 0)));
            Environment env = frozen;
            const PhasePair pair = run_phase_pair_forced(env, cfg, rng, eve);
            scores[static_cast<std::size_t>(t)] =
                model.predict(sample_from_pair(pair, specs).features);
        }
    });
    return scores;
}

ErrorRateReport monte_carlo_rates(const ModelState& model, const ScenarioConfig& cfg,
                                  const Environment& frozen, double nu, long trials,
                                  std::uint64_t seed, int jobs) {
    if (!(nu >= 0.0 && nu < 1.0)) throw ParameterError("monte carlo rates: nu must lie in [0,1)");
    const auto alice = frozen_trial_scores(model, cfg, frozen, false, trials, seed, jobs);
    const auto eve = frozen_trial_scores(model, cfg, frozen, true, trials, seed, jobs);

    long literal_fa = 0, literal_md = 0, op_fa = 0;
    for (double s : alice) {
        if (std::abs(s) <= nu) ++literal_fa;
        if (std::abs(1.0 - s) > nu) ++op_fa;
    }
    for (double s : eve)
        if (std::abs(1.0 - s) <= nu) ++literal_md;

    ErrorRateReport r;
    r.nu = nu;
    r.model_entries = static_cast<long>(model.dictionary().size());
    r.mc_trials = trials;
    r.seed = seed;
    r.mc_fa = static_cast<double>(literal_fa) / static_cast<double>(trials);
    r.mc_md = static_cast<double>(literal_md) / static_cast<double>(trials);
    r.op_fa = static_cast<double>(op_fa) / static_cast<double>(trials);
    r.op_md = r.mc_md;
    return r;
}

ErrorRateReport monte_carlo_rates(const ModelState& model, const ScenarioConfig& cfg, double nu,
                                  long trials) {
    Rng rng = Rng::substream(cfg.seed, 0x656e76ULL); // tag: "env"
    Environment env(cfg, rng);
    return monte_carlo_rates(model, cfg, env, nu, trials, cfg.seed);
}

ErrorRateReport validate_rates(const ModelState& model, const ScenarioConfig& cfg,
                               const Environment& frozen, double nu, int bins, long trials,
                               std::uint64_t seed, int jobs) {
    ErrorRateReport r = monte_carlo_rates(model, cfg, frozen, nu, trials, seed, jobs);
    const HypothesisLaws laws = feature_laws_for(cfg, frozen, bins);
    r.analytic_fa = analytic_fa(model, laws.phi0, nu, bins);
    r.analytic_md = analytic_md(model, laws.phi1, nu, bins);
    r.grid_bins = bins;
    return r;
}

std::string report_to_json_text(const ErrorRateReport& r) {
    nlohmann::json j;
    auto set = [&j](const char* key, double v) {
        if (std::isnan(v))
            j[key] = nullptr;
        else
            j[key] = v;
    };
    set("analytic_fa", r.analytic_fa);
    set("analytic_md", r.analytic_md);
    set("mc_fa", r.mc_fa);
    set("mc_md", r.mc_md);
    set("op_fa", r.op_fa);
    set("op_md", r.op_md);
    j["nu"] = r.nu;
    j["model_entries"] = r.model_entries;
    j["grid_bins"] = r.grid_bins;
    j["mc_trials"] = r.mc_trials;
    j["seed"] = r.seed;
    return j.dump(2);
}

void write_reports_csv(const std::string& path, const std::vector<ErrorRateReport>& reports) {
    CsvWriter w(path, {"L", "nu", "analytic_fa", "mc_fa", "analytic_md", "mc_md", "op_fa", "op_md",
                       "grid_bins", "mc_trials"});
    for (const auto& r : reports)
        w.row({static_cast<double>(r.model_entries), r.nu, r.analytic_fa, r.mc_fa, r.analytic_md,
               r.mc_md, r.op_fa, r.op_md, static_cast<double>(r.grid_bins),
               static_cast<double>(r.mc_trials)});
}

} // namespace phyauth
