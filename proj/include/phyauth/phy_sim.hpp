#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phyauth/attribute.hpp"
#include "phyauth/errors.hpp"
#include "phyauth/kernel.hpp"
#include "phyauth/rng.hpp"

namespace phyauth {

// How an attribute's true value moves between protocol ticks, and how the
// adversary's value is drawn when she does not imitate it.
enum class DriftKind { Static, GaussianRandomWalk, Ar1MultiTap, PathLossMotion };

struct DriftModel {
    DriftKind kind = DriftKind::Static;

    // Static / GaussianRandomWalk. The device value starts at
    // N(init_mean, init_std^2); a walk then adds walk_std * z per tick.
    double init_mean = 0.0;
    double init_std = 0.0;
    double walk_std = 0.0;

    // Ar1MultiTap. Each tap is base_k + u_k: base_k ~ N(0, power_k * scale^2)
    // is the persistent channel signature of a device position, u_k is a
    // zero-mean AR-1 fluctuation with per-tick correlation ar_coeff and
    // stationary std fluctuation * sqrt(power_k) * scale. Tap powers follow an
    // exponential delay profile exp(-(k-1)/tap_decay), normalized to unit sum.
    // The scalar feature is |sum_k tap_k * exp(-j * phase_rate * pi * k)|.
    int taps = 12;
    double ar_coeff = 0.99;
    double amplitude_scale = 1.0;
    double fluctuation = 0.3;
    double tap_decay = 4.0;
    double phase_rate = 4.99; // phasor advance per tap index, in units of pi

    // PathLossMotion. loss_db(d) = pl_ref_db + pl_slope_db * log10(d / 10).
    // The distance starts at init_distance_m and random-walks by
    // speed_mps * tick_seconds per tick with a random sign, clamped to
    // [min_distance_m, max_distance_m].
    double init_distance_m = 5.0;
    double speed_mps = 5.5556; // ~20 km/h
    double tick_seconds = 0.05;
    double pl_ref_db = 75.0;
    double pl_slope_db = 36.1;
    double min_distance_m = 1.0;
    double max_distance_m = 100.0;

    // Adversary draw for a non-imitated attribute: Static/GaussianRandomWalk
    // use an independent device value ~ N(eve_mean, eve_std^2), or, with
    // eve_tracks_value set, an imperfect imitation eve_mean + current value +
    // N(0, eve_std^2) (intercept-and-replay with estimation error).
    // Ar1MultiTap uses a fresh channel realization; PathLossMotion places the
    // adversary uniformly in [eve_distance_lo_m, eve_distance_hi_m].
    double eve_mean = 0.0;
    double eve_std = 0.0;
    bool eve_tracks_value = false;
    double eve_distance_lo_m = 20.0;
    double eve_distance_hi_m = 100.0;

    void validate() const;
    std::vector<double> tap_powers() const;
};

// Simulation recipe for one attribute: its normalization spec, drift model and
// per-phase estimation-noise std (natural units).
struct AttributeChannel {
    AttributeSpec spec;
    DriftModel drift;
    double noise_std_phase1 = 0.0;
    double noise_std_phase2 = 0.0;

    void validate() const;
};

// Full experiment description. Also carries the learner settings so one config
// file describes one run end to end.
struct ScenarioConfig {
    std::vector<AttributeChannel> attributes;
    std::vector<std::string> eve_imitates; // subset of attribute names
    int tau = 1;                           // ticks between phase I and phase II
    double eve_prior = 0.0;                // probability a phase-II message is the adversary's
    long trials = 300;
    std::uint64_t seed = 1;

    double mu = 0.1;
    WidthConfig kernel = WidthConfig::median();
    bool safety = true;

    void validate() const;
    std::vector<AttributeSpec> specs() const;
    std::vector<char> imitation_mask() const;
};

// Current true state of the legitimate link: one value/tap-set/distance per
// attribute. Copyable so Monte Carlo trials can branch from a frozen state.
class Environment {
public:
    Environment() = default;
    Environment(const ScenarioConfig& cfg, Rng& rng);

    void advance(int ticks, Rng& rng);

    std::vector<double> true_values() const;

    // Adversary's true values for one transmission: imitated attributes track
    // the legitimate device's current value exactly; the rest are fresh
    // independent draws per the drift model.
    std::vector<double> eve_true_values(Rng& rng) const;

    long tick_count() const { return ticks_; }
    std::size_t attribute_count() const { return channels_.size(); }

    // Introspection for tests and reports.
    double walk_value(std::size_t attr) const;
    double distance_m(std::size_t attr) const;
    std::vector<double> tap_values(std::size_t attr) const;

private:
    struct AttrState {
        double value = 0.0;            // Static / GaussianRandomWalk
        std::vector<double> tap_base;  // Ar1MultiTap signature
        std::vector<double> tap_dev;   // Ar1MultiTap fluctuation
        std::vector<double> tap_scale; // per-tap amplitude std (cached)
        std::vector<double> tap_sigma; // per-tap fluctuation std (cached)
        double distance = 0.0;         // PathLossMotion
    };

    double attr_true_value(std::size_t i) const;

    std::vector<AttributeChannel> channels_;
    std::vector<char> imitated_;
    std::vector<AttrState> state_;
    long ticks_ = 0;
};

// Path loss in dB. Distances below 1 m are clamped to 1 m; non-positive or
// beyond-range distances are rejected.
double path_loss_db(double distance_m, const DriftModel& drift);
double gen_rssi(double distance_m);

// Standalone trajectory generators (also used by the moment/autocorrelation tests).
std::vector<double> gen_cfo_trajectory(int steps, const DriftModel& drift, Rng& rng);
std::vector<std::vector<double>> gen_cir_taps(int steps, const DriftModel& drift, Rng& rng);
double cir_feature(const std::vector<double>& taps, const DriftModel& drift);
std::vector<double> gen_cir_trajectory(int steps, const DriftModel& drift, Rng& rng);

struct PhasePair {
    EstimateVector phase1;
    EstimateVector phase2;
    bool eve = false;
    std::vector<double> true_phase1; // legitimate device's values at phase I
    std::vector<double> true_phase2; // transmitter's values at phase II
};

// One authentication event: measure phase I from the current state, advance
// the environment by tau ticks, then measure phase II from either the
// legitimate device or the adversary.
PhasePair run_phase_pair(Environment& env, const ScenarioConfig& cfg, Rng& rng);
PhasePair run_phase_pair_forced(Environment& env, const ScenarioConfig& cfg, Rng& rng, bool eve);

NormalizedSample sample_from_pair(const PhasePair& pair, const std::vector<AttributeSpec>& specs,
                                  ClampCounters* clamps = nullptr);

struct StreamResult {
    std::vector<NormalizedSample> samples;
    std::vector<char> hypothesis_eve;
    ClampCounters clamps;
    Environment final_env;
};

// `trials` labeled samples from a fresh environment seeded by cfg.seed.
StreamResult generate_stream(const ScenarioConfig& cfg);

void write_stream_csv(const std::string& path, const StreamResult& stream,
                      const std::vector<AttributeSpec>& specs);
StreamResult read_stream_csv(const std::string& path);

// Default channels used by the built-in experiment presets. Units: CFO in kHz,
// CIR as dimensionless tap-sum magnitude, RSSI as path loss in dB. Ranges are
// for two-phase differences and estimation noise defaults to 1% of the range
// span per phase.
AttributeChannel make_cfo_channel();
AttributeChannel make_cir_channel();
AttributeChannel make_rssi_channel();
AttributeChannel make_synthetic_channel(int index);

// Config file (JSON) loading/saving; throws SchemaError with a field path on
// malformed input.
ScenarioConfig scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::string& path);

} // namespace phyauth
