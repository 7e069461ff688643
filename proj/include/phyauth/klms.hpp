#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "phyauth/attribute.hpp"
#include "phyauth/errors.hpp"
#include "phyauth/kernel.hpp"

namespace phyauth {

struct ScenarioConfig; // phy_sim.hpp

// Result of one online learning step.
struct StepOutcome {
    double prediction_error = 0.0; // label minus prediction
    double prediction = 0.0;       // model output before the update
};

// Online kernel least-mean-square model. The function is represented by the
// stored normalized inputs (the dictionary) and one coefficient per entry; a
// feature-space weight vector is never materialized. Each step appends
// mu * error as the new coefficient and leaves previous coefficients
// untouched, so the whole expansion equals mu * (e[1], ..., e[l]).
//
// Single writer: step() mutates, predict() is const and may run concurrently
// with other reads but not with a step.
class ModelState {
public:
    ModelState(double step_size, KernelParams kernel, bool safety = true);

    // Kernel expansion evaluated at `query`; 0 for an empty model.
    double predict(const std::vector<double>& query) const;

    // One stochastic-gradient update. With safety mode on, mu is checked
    // against the stability bound of the samples seen so far (including this
    // one) and a StepSizeError is thrown if it is not strictly inside.
    StepOutcome step(const NormalizedSample& sample);

    const std::vector<std::vector<double>>& dictionary() const { return dictionary_; }
    const std::vector<double>& coefficients() const { return coefficients_; }
    double step_size() const { return step_size_; }
    const KernelParams& kernel() const { return kernel_; }
    long iteration() const { return iteration_; }
    bool safety_mode() const { return safety_; }

    // Checkpoint restore: append a dictionary entry with its final
    // coefficient, bypassing the learning rule.
    void restore_entry(std::vector<double> features, double coefficient);

private:
    std::vector<std::vector<double>> dictionary_;
    std::vector<double> coefficients_;
    double step_size_;
    KernelParams kernel_;
    bool safety_;
    double self_kernel_sum_ = 0.0; // running sum of kappa(x_l, x_l)
    long iteration_ = 0;
};

// Stability bound for the step size: L / sum_l kappa(x_l, x_l). For the
// Gaussian kernel every self-similarity is 1, so the bound is exactly 1
// regardless of the data; the general form is kept for other self-similarity
// profiles.
double step_size_upper_bound(const std::vector<std::vector<double>>& samples,
                             const KernelParams& kernel);
double step_size_upper_bound_from_self_similarities(const std::vector<double>& self_kernels);

struct TrainResult {
    ModelState model;
    std::vector<double> error_trace; // e[l], one per sample, in order
};

TrainResult train(const std::vector<NormalizedSample>& stream, double mu, KernelParams kernel,
                  bool safety = true);

// Mean squared prediction error per iteration, estimated by averaging e[l]^2
// over `runs` independently seeded realizations of the sample stream.
// `stream_for_run` must yield equal-length streams.
std::vector<double> ensemble_mse_curve(
    const std::function<std::vector<NormalizedSample>(std::uint64_t run_index)>& stream_for_run,
    double mu, const WidthConfig& width, std::uint64_t seed, int runs, int jobs = 1,
    bool safety = true);

// Convenience overload generating the streams with the scenario simulator;
// run r uses seed substream(cfg.seed, r).
std::vector<double> mse_curve(const ScenarioConfig& cfg, int runs, int jobs = 1);

// First iteration l (1-based) from which the 20-iteration trailing mean keeps
// changing by less than 5% relative to its previous value for `consecutive`
// iterations in a row (the debounce keeps ensemble noise from tripping the
// detector during a slow decay). Empty when the curve never settles. This
// detector is quoted in reports wherever "steady state" is claimed.
std::optional<std::size_t> iterations_to_steady_state(const std::vector<double>& curve,
                                                      std::size_t window = 20,
                                                      double rel_change = 0.05,
                                                      std::size_t consecutive = 5);

// Checkpoint I/O. Text format, byte-order independent:
//   line 1: "phyauth-klms v1"
//   line 2: "sigma <v> mu <v> features <N> entries <l>"
//   then l lines of N feature values followed by the coefficient,
// all doubles as %.17g (exact round-trip). Documented in README.md.
void save_model(const ModelState& model, const std::string& path);
ModelState load_model(const std::string& path);

void write_error_trace_csv(const std::string& path, const std::vector<double>& trace);

} // namespace phyauth
