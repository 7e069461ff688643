#include "phyauth/klms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "phyauth/csv.hpp"
#include "phyauth/parallel.hpp"
#include "phyauth/phy_sim.hpp"
#include "phyauth/rng.hpp"

namespace phyauth {

ModelState::ModelState(double step_size, KernelParams kernel, bool safety)
    : step_size_(step_size), kernel_(kernel), safety_(safety) {
    kernel_.validate();
    if (!std::isfinite(step_size_) || step_size_ <= 0.0)
        throw ParameterError("step size must be positive and finite");
}

double ModelState::predict(const std::vector<double>& query) const {
    if (dictionary_.empty()) return 0.0;
    if (query.size() != dictionary_.front().size())
        throw DimensionError("predict: query length does not match stored inputs");
    double sum = 0.0;
    for (std::size_t i = 0; i < dictionary_.size(); ++i)
        sum += coefficients_[i] * gaussian_kernel(dictionary_[i], query, kernel_);
    return sum;
}

StepOutcome ModelState::step(const NormalizedSample& sample) {
    for (double v : sample.features)
        if (!std::isfinite(v)) throw DataError("step: non-finite feature component");
    if (!std::isfinite(sample.label)) throw DataError("step: non-finite label");
    if (!dictionary_.empty() && sample.features.size() != dictionary_.front().size())
        throw DimensionError("step: feature length does not match stored inputs");

    const double self_kernel = gaussian_kernel(sample.features, sample.features, kernel_);
    if (safety_) {
        const double bound =
            static_cast<double>(iteration_ + 1) / (self_kernel_sum_ + self_kernel);
        if (!(step_size_ < bound))
            throw StepSizeError("step size " + format_double(step_size_) +
                                " is outside the stability bound " + format_double(bound));
    }

    StepOutcome out;
    out.prediction = predict(sample.features);
    out.prediction_error = sample.label - out.prediction;

    dictionary_.push_back(sample.features);
    coefficients_.push_back(step_size_ * out.prediction_error);
    self_kernel_sum_ += self_kernel;
    ++iteration_;
    return out;
}

void ModelState::restore_entry(std::vector<double> features, double coefficient) {
    if (!dictionary_.empty() && features.size() != dictionary_.front().size())
        throw DimensionError("restore_entry: feature length does not match stored inputs");
    self_kernel_sum_ += gaussian_kernel(features, features, kernel_);
    dictionary_.push_back(std::move(features));
    coefficients_.push_back(coefficient);
    ++iteration_;
}

double step_size_upper_bound_from_self_similarities(const std::vector<double>& self_kernels) {
    if (self_kernels.empty())
        throw InsufficientDataError("step-size bound needs at least one sample");
    double sum = 0.0;
    for (double k : self_kernels) sum += k;
    return static_cast<double>(self_kernels.size()) / sum;
}

double step_size_upper_bound(const std::vector<std::vector<double>>& samples,
                             const KernelParams& kernel) {
    if (samples.empty()) throw InsufficientDataError("step-size bound needs at least one sample");
    std::vector<double> self(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        self[i] = gaussian_kernel(samples[i], samples[i], kernel);
    return step_size_upper_bound_from_self_similarities(self);
}

TrainResult train(const std::vector<NormalizedSample>& stream, double mu, KernelParams kernel,
                  bool safety) {
    if (stream.empty()) throw InsufficientDataError("train: empty sample stream");
    TrainResult r{ModelState(mu, kernel, safety), {}};
    r.error_trace.reserve(stream.size());
    for (const auto& s : stream) r.error_trace.push_back(r.model.step(s).prediction_error);
    return r;
}

std::vector<double> ensemble_mse_curve(
    const std::function<std::vector<NormalizedSample>(std::uint64_t run_index)>& stream_for_run,
    double mu, const WidthConfig& width, std::uint64_t seed, int runs, int jobs, bool safety) {
    if (runs < 1) throw ParameterError("ensemble: runs must be >= 1");
    if (jobs < 1) jobs = 1;

    // Runs are independent; results land in preassigned slots so the
    // reduction below is order-independent and deterministic.
    std::vector<std::vector<double>> traces(static_cast<std::size_t>(runs));
    parallel_chunks(runs, jobs, [&](long begin, long end) {
        for (long r = begin; r < end; ++r) {
            const auto stream = stream_for_run(static_cast<std::uint64_t>(r));
            std::vector<std::vector<double>> features;
            features.reserve(stream.size());
            for (const auto& s : stream) features.push_back(s.features);
            const KernelParams kp =
                width.resolve(features, substream_seed(seed, static_cast<std::uint64_t>(r)));
            traces[static_cast<std::size_t>(r)] = train(stream, mu, kp, safety).error_trace;
        }
    });

    const std::size_t len = traces.front().size();
    for (const auto& t : traces)
        if (t.size() != len) throw DataError("ensemble: stream lengths differ across runs");

    std::vector<double> curve(len, 0.0);
    for (const auto& t : traces)
        for (std::size_t l = 0; l < len; ++l) curve[l] += t[l] * t[l];
    for (double& v : curve) v /= static_cast<double>(runs);
    return curve;
}

std::vector<double> mse_curve(const ScenarioConfig& cfg, int runs, int jobs) {
    cfg.validate();
    auto stream_for_run = [&cfg](std::uint64_t run) {
        ScenarioConfig per_run = cfg;
        per_run.seed = substream_seed(cfg.seed, run);
        return generate_stream(per_run).samples;
    };
    return ensemble_mse_curve(stream_for_run, cfg.mu, cfg.kernel, cfg.seed, runs, jobs,
                              cfg.safety);
}

std::optional<std::size_t> iterations_to_steady_state(const std::vector<double>& curve,
                                                      std::size_t window, double rel_change,
                                                      std::size_t consecutive) {
    if (window < 2 || consecutive < 1 || curve.size() <= window) return std::nullopt;
    auto trailing_mean = [&](std::size_t last) { // inclusive index of window end
        double s = 0.0;
        for (std::size_t i = last + 1 - window; i <= last; ++i) s += curve[i];
        return s / static_cast<double>(window);
    };
    std::size_t streak = 0;
    for (std::size_t last = window; last < curve.size(); ++last) {
        const double prev = trailing_mean(last - 1);
        const double cur = trailing_mean(last);
        const bool settled =
            prev == 0.0 ? cur == 0.0 : std::abs(cur - prev) / std::abs(prev) < rel_change;
        streak = settled ? streak + 1 : 0;
        if (streak >= consecutive) return last + 2 - consecutive; // first iteration of the streak
    }
    return std::nullopt;
}

void save_model(const ModelState& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParameterError("cannot open checkpoint for writing: " + path);
    const auto& dict = model.dictionary();
    const std::size_t features = dict.empty() ? 0 : dict.front().size();
    out << "phyauth-klms v1\n";
    out << "sigma " << format_double(model.kernel().width) << " mu "
        << format_double(model.step_size()) << " features " << features << " entries "
        << dict.size() << "\n";
    for (std::size_t i = 0; i < dict.size(); ++i) {
        for (double v : dict[i]) out << format_double(v) << ' ';
        out << format_double(model.coefficients()[i]) << '\n';
    }
}

ModelState load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParameterError("cannot open checkpoint: " + path);
    std::string header;
    std::getline(in, header);
    if (header != "phyauth-klms v1") throw DataError("unrecognized checkpoint header: " + header);
    std::string sigma_key, mu_key, feat_key, entries_key;
    double sigma = 0, mu = 0;
    std::size_t features = 0, entries = 0;
    in >> sigma_key >> sigma >> mu_key >> mu >> feat_key >> features >> entries_key >> entries;
    if (sigma_key != "sigma" || mu_key != "mu" || feat_key != "features" ||
        entries_key != "entries" || !in)
        throw DataError("malformed checkpoint metadata line");

    // Rebuilding via step() would re-run the learning rule; the checkpoint
    // carries final coefficients, so restore state directly.
    ModelState model(mu, KernelParams{sigma}, /*safety=*/false);
    for (std::size_t i = 0; i < entries; ++i) {
        NormalizedSample s;
        s.features.resize(features);
        for (std::size_t f = 0; f < features; ++f) in >> s.features[f];
        double alpha = 0;
        in >> alpha;
        if (!in) throw DataError("truncated checkpoint dictionary");
        model.restore_entry(s.features, alpha);
    }
    return model;
}

void write_error_trace_csv(const std::string& path, const std::vector<double>& trace) {
    CsvWriter w(path, {"iteration", "error", "squared_error"});
    for (std::size_t l = 0; l < trace.size(); ++l)
        w.row({static_cast<double>(l + 1), trace[l], trace[l] * trace[l]});
}

} // namespace phyauth
