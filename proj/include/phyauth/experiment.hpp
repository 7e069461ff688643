#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phyauth/analysis.hpp"
#include "phyauth/authenticator.hpp"
#include "phyauth/klms.hpp"
#include "phyauth/phy_sim.hpp"

namespace phyauth {

struct RunOptions {
    std::string out_dir;
    std::optional<std::uint64_t> seed;  // overrides preset/config seed
    std::optional<long> trials;         // overrides test-trial counts
    int jobs = 1;
    bool svg = true;
};

struct ManifestEntry {
    std::string file;
    std::string sha256;
    std::uint64_t bytes = 0;
};

struct Manifest {
    std::string preset;
    std::uint64_t seed = 0;
    double wall_time_s = 0.0;
    std::string git_describe;
    std::vector<ManifestEntry> outputs;
    std::string path; // where manifest.json was written
};

struct Preset {
    std::string name;
    std::string description;
};

const std::vector<Preset>& experiment_presets();
bool is_preset(const std::string& name);

// Runs a named preset or a scenario config file end to end: CSV data files,
// one SVG per figure analog, resolved config JSON, and a manifest listing
// every output with its content hash.
Manifest run_experiment(const std::string& preset_or_config, const RunOptions& options);

// Trained-on-legitimate-traffic model plus the environment state it left off
// at; the basis of every authentication experiment.
struct TrainedScenario {
    ModelState model;
    Environment env;
    KernelParams kernel;
    std::vector<double> error_trace;
    long clamped_features = 0;
};

TrainedScenario train_on_legitimate(const ScenarioConfig& cfg, long train_samples);

// FA/MD trade-off of a trained model against the configured adversary.
struct AttackSweep {
    std::vector<SweepPoint> sweep;
    double nu_at_budget = 0.0;
    double md_at_budget = 0.0;
    double fa_at_budget = 0.0;
    long trials = 0;
};

AttackSweep attack_sweep(const ScenarioConfig& cfg, long train_samples, long test_trials,
                         double fa_budget, const std::vector<double>& nu_grid, int jobs = 1);

// Non-updating process vs continually-updated process. The staleness value is
// the age of the stored phase-I reference at authentication time: every trial
// measures its reference, lets the environment run for staleness + tau ticks,
// then authenticates the phase-II message against it. The frozen side keeps
// the model trained at time zero and the full reference age; the adaptive
// side keeps learning from fresh labeled exchanges and authenticates with a
// fresh reference (age tau only). MD is reported at the threshold calibrated
// per point to the FA budget.
struct StalenessRow {
    long staleness_ticks = 0;
    double frozen_md = 0.0;
    double frozen_nu = 0.0;
    double adaptive_md = 0.0;
    double adaptive_nu = 0.0;
};

std::vector<StalenessRow> static_baseline_run(const ScenarioConfig& cfg,
                                              const std::vector<int>& staleness_ticks,
                                              long trials_per_point, double fa_budget,
                                              int jobs = 1, int refresh_samples = 20,
                                              long train_samples = 300);

// Stream whose phase-II transmitter strictly alternates between the
// legitimate device and the adversary; used by the step-size divergence
// experiment, where the conflicting labels drive the instability.
StreamResult generate_alternating_stream(const ScenarioConfig& cfg);

// Scores of branched trials whose phase-I reference is `age_ticks` old by the
// time the phase-II message arrives (total gap age_ticks + cfg.tau).
std::vector<double> aged_trial_scores(const ModelState& model, const ScenarioConfig& cfg,
                                      const Environment& base, long age_ticks, bool eve,
                                      long trials, std::uint64_t seed, int jobs = 1);

std::vector<double> default_nu_grid(std::size_t points = 200);

} // namespace phyauth
