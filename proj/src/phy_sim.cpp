#include "phyauth/phy_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "phyauth/csv.hpp"

namespace phyauth {

using nlohmann::json;

// ---------------------------------------------------------------------------
// DriftModel / config validation
// ---------------------------------------------------------------------------

namespace {
// Domain of the log-distance path-loss model; distances below 1 m are clamped
// and the roaming/adversary ranges must stay below 100 m.
constexpr double kPathLossFloorM = 1.0;
constexpr double kPathLossDomainM = 100.0;
} // namespace

void DriftModel::validate() const {
    switch (kind) {
    case DriftKind::Static:
    case DriftKind::GaussianRandomWalk:
        if (init_std < 0 || walk_std < 0 || eve_std < 0)
            throw ParameterError("drift: standard deviations must be >= 0");
        break;
    case DriftKind::Ar1MultiTap:
        if (taps < 1) throw ParameterError("drift: tap count must be >= 1");
        if (!(std::abs(ar_coeff) < 1.0))
            throw ParameterError("drift: AR coefficient magnitude must be < 1");
        if (amplitude_scale < 0 || fluctuation < 0)
            throw ParameterError("drift: amplitude scale and fluctuation must be >= 0");
        if (tap_decay <= 0) throw ParameterError("drift: tap decay must be > 0");
        break;
    case DriftKind::PathLossMotion:
        if (speed_mps < 0) throw ParameterError("drift: speed must be >= 0");
        if (tick_seconds <= 0) throw ParameterError("drift: tick duration must be > 0");
        if (!(0 < min_distance_m && min_distance_m <= init_distance_m &&
              init_distance_m <= max_distance_m && max_distance_m <= kPathLossDomainM))
            throw ParameterError("drift: need 0 < min <= init <= max <= 100 m");
        if (!(0 < eve_distance_lo_m && eve_distance_lo_m <= eve_distance_hi_m &&
              eve_distance_hi_m <= kPathLossDomainM))
            throw ParameterError("drift: adversary distance range must lie in (0, 100] m");
        break;
    }
}

std::vector<double> DriftModel::tap_powers() const {
    std::vector<double> p(static_cast<std::size_t>(taps));
    double sum = 0.0;
    for (int k = 0; k < taps; ++k) {
        p[static_cast<std::size_t>(k)] = std::exp(-static_cast<double>(k) / tap_decay);
        sum += p[static_cast<std::size_t>(k)];
    }
    for (double& v : p) v /= sum;
    return p;
}

void AttributeChannel::validate() const {
    spec.validate();
    drift.validate();
    if (noise_std_phase1 < 0 || noise_std_phase2 < 0)
        throw ParameterError("attribute '" + spec.name + "': noise std must be >= 0");
}

void ScenarioConfig::validate() const {
    if (attributes.empty()) throw ParameterError("scenario: need at least one attribute");
    std::vector<AttributeSpec> s = specs();
    validate_attribute_set(s);
    for (const auto& c : attributes) c.validate();
    for (const auto& name : eve_imitates) {
        bool found = false;
        for (const auto& c : attributes) found = found || c.spec.name == name;
        if (!found)
            throw ParameterError("scenario: eve_imitates names unknown attribute '" + name + "'");
    }
    if (tau < 1) throw ParameterError("scenario: tau must be >= 1");
    if (!(eve_prior >= 0.0 && eve_prior <= 1.0))
        throw ParameterError("scenario: eve_prior must lie in [0,1]");
    if (trials < 1) throw ParameterError("scenario: trials must be >= 1");
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ParameterError("scenario: mu must be > 0");
}

std::vector<AttributeSpec> ScenarioConfig::specs() const {
    std::vector<AttributeSpec> s;
    s.reserve(attributes.size());
    for (const auto& c : attributes) s.push_back(c.spec);
    return s;
}

std::vector<char> ScenarioConfig::imitation_mask() const {
    std::vector<char> mask(attributes.size(), 0);
    for (std::size_t i = 0; i < attributes.size(); ++i) {
        for (const auto& name : eve_imitates)
            if (attributes[i].spec.name == name) mask[i] = 1;
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Trajectory generators
// ---------------------------------------------------------------------------

double path_loss_db(double distance_m, const DriftModel& drift) {
    if (!(distance_m > 0.0))
        throw ParameterError("path loss: distance must be positive");
    if (distance_m > kPathLossDomainM)
        throw ParameterError("path loss: distance beyond modeled range");
    const double d = std::max(distance_m, kPathLossFloorM);
    return drift.pl_ref_db + drift.pl_slope_db * std::log10(d / 10.0);
}

double gen_rssi(double distance_m) { return path_loss_db(distance_m, DriftModel{}); }

std::vector<double> gen_cfo_trajectory(int steps, const DriftModel& drift, Rng& rng) {
    if (steps < 1) throw ParameterError("trajectory: steps must be >= 1");
    drift.validate();
    std::vector<double> traj(static_cast<std::size_t>(steps));
    traj[0] = drift.init_mean + drift.init_std * rng.normal();
    for (int t = 1; t < steps; ++t)
        traj[static_cast<std::size_t>(t)] =
            traj[static_cast<std::size_t>(t - 1)] + drift.walk_std * rng.normal();
    return traj;
}

std::vector<std::vector<double>> gen_cir_taps(int steps, const DriftModel& drift, Rng& rng) {
    if (steps < 1) throw ParameterError("trajectory: steps must be >= 1");
    drift.validate();
    const std::vector<double> powers = drift.tap_powers();
    const std::size_t m = powers.size();
    std::vector<double> base(m), dev(m, 0.0);
    for (std::size_t k = 0; k < m; ++k)
        base[k] = drift.amplitude_scale * std::sqrt(powers[k]) * rng.normal();

    const double rho = drift.ar_coeff;
    const double innov_gain = std::sqrt(1.0 - rho * rho);
    std::vector<std::vector<double>> taps(static_cast<std::size_t>(steps),
                                          std::vector<double>(m));
    for (int t = 0; t < steps; ++t) {
        if (t > 0) {
            for (std::size_t k = 0; k < m; ++k) {
                const double sigma =
                    drift.fluctuation * drift.amplitude_scale * std::sqrt(powers[k]);
                dev[k] = rho * dev[k] + innov_gain * sigma * rng.normal();
            }
        }
        for (std::size_t k = 0; k < m; ++k)
            taps[static_cast<std::size_t>(t)][k] = base[k] + dev[k];
    }
    return taps;
}

double cir_feature(const std::vector<double>& taps, const DriftModel& drift) {
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < taps.size(); ++k) {
        const double theta = drift.phase_rate * M_PI * static_cast<double>(k + 1);
        re += taps[k] * std::cos(theta);
        im -= taps[k] * std::sin(theta);
    }
    return std::hypot(re, im);
}

std::vector<double> gen_cir_trajectory(int steps, const DriftModel& drift, Rng& rng) {
    const auto taps = gen_cir_taps(steps, drift, rng);
    std::vector<double> out(taps.size());
    for (std::size_t t = 0; t < taps.size(); ++t) out[t] = cir_feature(taps[t], drift);
    return out;
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

Environment::Environment(const ScenarioConfig& cfg, Rng& rng)
    : channels_(cfg.attributes), imitated_(cfg.imitation_mask()) {
    cfg.validate();
    state_.resize(channels_.size());
    for (std::size_t i = 0; i < channels_.size(); ++i) {
        const DriftModel& d = channels_[i].drift;
        AttrState& st = state_[i];
        switch (d.kind) {
        case DriftKind::Static:
        case DriftKind::GaussianRandomWalk:
            st.value = d.init_mean + d.init_std * rng.normal();
            break;
        case DriftKind::Ar1MultiTap: {
            const auto powers = d.tap_powers();
            st.tap_scale.resize(powers.size());
            st.tap_sigma.resize(powers.size());
            for (std::size_t k = 0; k < powers.size(); ++k) {
                st.tap_scale[k] = d.amplitude_scale * std::sqrt(powers[k]);
                st.tap_sigma[k] = d.fluctuation * d.amplitude_scale * std::sqrt(powers[k]);
            }
            st.tap_base.resize(powers.size());
            st.tap_dev.assign(powers.size(), 0.0);
            for (std::size_t k = 0; k < powers.size(); ++k)
                st.tap_base[k] = st.tap_scale[k] * rng.normal();
            break;
        }
        case DriftKind::PathLossMotion:
            st.distance = d.init_distance_m;
            break;
        }
    }
}

void Environment::advance(int ticks, Rng& rng) {
    if (ticks < 0) throw ParameterError("environment: cannot advance by negative ticks");
    for (int t = 0; t < ticks; ++t) {
        ++ticks_;
        for (std::size_t i = 0; i < channels_.size(); ++i) {
            const DriftModel& d = channels_[i].drift;
            AttrState& st = state_[i];
            switch (d.kind) {
            case DriftKind::Static:
                break;
            case DriftKind::GaussianRandomWalk:
                st.value += d.walk_std * rng.normal();
                break;
            case DriftKind::Ar1MultiTap: {
                const double gain = std::sqrt(1.0 - d.ar_coeff * d.ar_coeff);
                for (std::size_t k = 0; k < st.tap_dev.size(); ++k)
                    st.tap_dev[k] =
                        d.ar_coeff * st.tap_dev[k] + gain * st.tap_sigma[k] * rng.normal();
                break;
            }
            case DriftKind::PathLossMotion: {
                const double dir = rng.uniform01() < 0.5 ? -1.0 : 1.0;
                st.distance = std::clamp(st.distance + dir * d.speed_mps * d.tick_seconds,
                                         d.min_distance_m, d.max_distance_m);
                break;
            }
            }
        }
    }
}

double Environment::attr_true_value(std::size_t i) const {
    const DriftModel& d = channels_[i].drift;
    const AttrState& st = state_[i];
    switch (d.kind) {
    case DriftKind::Static:
    case DriftKind::GaussianRandomWalk:
        return st.value;
    case DriftKind::Ar1MultiTap: {
        std::vector<double> taps(st.tap_base.size());
        for (std::size_t k = 0; k < taps.size(); ++k) taps[k] = st.tap_base[k] + st.tap_dev[k];
        return cir_feature(taps, d);
    }
    case DriftKind::PathLossMotion:
        return path_loss_db(st.distance, d);
    }
    return 0.0;
}

std::vector<double> Environment::true_values() const {
    std::vector<double> v(channels_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = attr_true_value(i);
    return v;
}

std::vector<double> Environment::eve_true_values(Rng& rng) const {
    std::vector<double> v(channels_.size());
    for (std::size_t i = 0; i < channels_.size(); ++i) {
        if (imitated_[i]) {
            v[i] = attr_true_value(i);
            continue;
        }
        const DriftModel& d = channels_[i].drift;
        switch (d.kind) {
        case DriftKind::Static:
        case DriftKind::GaussianRandomWalk:
            v[i] = d.eve_mean + d.eve_std * rng.normal() +
                   (d.eve_tracks_value ? attr_true_value(i) : 0.0);
            break;
        case DriftKind::Ar1MultiTap: {
            const AttrState& st = state_[i];
            std::vector<double> taps(st.tap_scale.size());
            for (std::size_t k = 0; k < taps.size(); ++k)
                taps[k] = st.tap_scale[k] * rng.normal();
            v[i] = cir_feature(taps, d);
            break;
        }
        case DriftKind::PathLossMotion:
            v[i] = path_loss_db(rng.uniform(d.eve_distance_lo_m, d.eve_distance_hi_m), d);
            break;
        }
    }
    return v;
}

double Environment::walk_value(std::size_t attr) const { return state_.at(attr).value; }
double Environment::distance_m(std::size_t attr) const { return state_.at(attr).distance; }
std::vector<double> Environment::tap_values(std::size_t attr) const {
    const AttrState& st = state_.at(attr);
    std::vector<double> taps(st.tap_base.size());
    for (std::size_t k = 0; k < taps.size(); ++k) taps[k] = st.tap_base[k] + st.tap_dev[k];
    return taps;
}

// ---------------------------------------------------------------------------
// Two-phase protocol
// ---------------------------------------------------------------------------

namespace {

EstimateVector measure(const std::vector<double>& truth, const ScenarioConfig& cfg, Phase phase,
                       long tick, Rng& rng) {
    EstimateVector e;
    e.phase = phase;
    e.time_index = tick;
    e.values.resize(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double std_dev = phase == Phase::I ? cfg.attributes[i].noise_std_phase1
                                                 : cfg.attributes[i].noise_std_phase2;
        e.values[i] = truth[i] + std_dev * rng.normal();
    }
    return e;
}

} // namespace

PhasePair run_phase_pair_forced(Environment& env, const ScenarioConfig& cfg, Rng& rng, bool eve) {
    PhasePair out;
    out.true_phase1 = env.true_values();
    out.phase1 = measure(out.true_phase1, cfg, Phase::I, env.tick_count(), rng);
    env.advance(cfg.tau, rng);
    out.eve = eve;
    out.true_phase2 = eve ? env.eve_true_values(rng) : env.true_values();
    out.phase2 = measure(out.true_phase2, cfg, Phase::II, env.tick_count(), rng);
    return out;
}

PhasePair run_phase_pair(Environment& env, const ScenarioConfig& cfg, Rng& rng) {
    // The hypothesis coin is always spent, so streams with different priors
    // stay draw-aligned.
    const bool eve = rng.uniform01() < cfg.eve_prior;
    return run_phase_pair_forced(env, cfg, rng, eve);
}

NormalizedSample sample_from_pair(const PhasePair& pair, const std::vector<AttributeSpec>& specs,
                                  ClampCounters* clamps) {
    NormalizedSample s;
    s.features = normalize(diff(pair.phase1, pair.phase2), specs, clamps);
    s.label = pair.eve ? 0.0 : 1.0;
    return s;
}

StreamResult generate_stream(const ScenarioConfig& cfg) {
    cfg.validate();
    StreamResult out;
    Rng rng = Rng::substream(cfg.seed, 0x73747265616dULL); // tag: "stream"
    out.final_env = Environment(cfg, rng);
    const auto specs = cfg.specs();
    out.samples.reserve(static_cast<std::size_t>(cfg.trials));
    out.hypothesis_eve.reserve(static_cast<std::size_t>(cfg.trials));
    for (long t = 0; t < cfg.trials; ++t) {
        const PhasePair pair = run_phase_pair(out.final_env, cfg, rng);
        out.samples.push_back(sample_from_pair(pair, specs, &out.clamps));
        out.hypothesis_eve.push_back(pair.eve ? 1 : 0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stream CSV replay
// ---------------------------------------------------------------------------

void write_stream_csv(const std::string& path, const StreamResult& stream,
                      const std::vector<AttributeSpec>& specs) {
    std::vector<std::string> cols;
    for (const auto& s : specs) cols.push_back("f_" + s.name);
    cols.push_back("label");
    cols.push_back("hypothesis");
    CsvWriter w(path, cols);
    for (std::size_t i = 0; i < stream.samples.size(); ++i) {
        std::vector<double> row = stream.samples[i].features;
        row.push_back(stream.samples[i].label);
        row.push_back(stream.hypothesis_eve[i] ? 1.0 : 0.0);
        w.row(row);
    }
}

StreamResult read_stream_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParameterError("cannot open stream CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("stream CSV is empty: " + path);
    const std::size_t columns = split_csv_line(line).size();
    if (columns < 3) throw DataError("stream CSV needs features, label, hypothesis columns");
    StreamResult out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != columns) throw DataError("stream CSV: ragged row");
        NormalizedSample s;
        for (std::size_t i = 0; i + 2 < cells.size(); ++i)
            s.features.push_back(std::stod(cells[i]));
        s.label = std::stod(cells[cells.size() - 2]);
        out.samples.push_back(std::move(s));
        out.hypothesis_eve.push_back(std::stod(cells.back()) != 0.0 ? 1 : 0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Standard channels
// ---------------------------------------------------------------------------

AttributeChannel make_cfo_channel() {
    AttributeChannel c;
    c.spec = {"cfo", -78.125, 78.125}; // kHz
    c.drift.kind = DriftKind::GaussianRandomWalk;
    c.drift.init_mean = 0.0;
    c.drift.init_std = 15.0;
    // Per-tick walk std as a fraction (2.35e-7) of the estimation range span.
    c.drift.walk_std = 2.35e-7 * c.spec.span();
    c.drift.eve_mean = 0.0;
    c.drift.eve_std = 15.0;
    c.noise_std_phase1 = c.noise_std_phase2 = 0.01 * c.spec.span();
    return c;
}

AttributeChannel make_cir_channel() {
    AttributeChannel c;
    c.spec = {"cir", -4.0, 4.0};
    c.drift.kind = DriftKind::Ar1MultiTap;
    c.drift.taps = 12;
    c.drift.ar_coeff = 0.99;
    c.drift.amplitude_scale = 1.0;
    c.drift.fluctuation = 0.1;
    c.drift.tap_decay = 4.0;
    c.noise_std_phase1 = c.noise_std_phase2 = 0.01 * c.spec.span();
    return c;
}

AttributeChannel make_rssi_channel() {
    AttributeChannel c;
    c.spec = {"rssi", -72.2, 72.2}; // dB
    c.drift.kind = DriftKind::PathLossMotion;
    c.drift.init_distance_m = 5.0;
    c.drift.speed_mps = 5.5556;
    c.drift.tick_seconds = 0.05;
    // Default roaming cell of a few meters around the base position; wider
    // cells make the difference features strongly heteroscedastic (the
    // path-loss slope grows as 1/distance).
    c.drift.min_distance_m = 4.0;
    c.drift.max_distance_m = 8.0;
    c.drift.eve_distance_lo_m = 20.0;
    c.drift.eve_distance_hi_m = 100.0;
    c.noise_std_phase1 = c.noise_std_phase2 = 0.01 * c.spec.span();
    return c;
}

AttributeChannel make_synthetic_channel(int index) {
    AttributeChannel c;
    c.spec = {"synth" + std::to_string(index), -2.0, 2.0};
    c.drift.kind = DriftKind::GaussianRandomWalk;
    c.drift.init_mean = 0.0;
    c.drift.init_std = 0.5;
    c.drift.walk_std = 0.002;
    c.drift.eve_mean = 0.0;
    c.drift.eve_std = 0.5;
    c.noise_std_phase1 = c.noise_std_phase2 = 0.01 * c.spec.span();
    return c;
}

// ---------------------------------------------------------------------------
// JSON config
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
    throw SchemaError("config error at " + path + ": " + what);
}

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) schema_fail(path, "expected a number");
    return j.get<double>();
}

DriftKind kind_from_string(const std::string& s, const std::string& path) {
    if (s == "static") return DriftKind::Static;
    if (s == "gaussian_random_walk") return DriftKind::GaussianRandomWalk;
    if (s == "ar1_multi_tap") return DriftKind::Ar1MultiTap;
    if (s == "path_loss_motion") return DriftKind::PathLossMotion;
    schema_fail(path, "unknown drift kind '" + s + "'");
}

std::string kind_to_string(DriftKind k) {
    switch (k) {
    case DriftKind::Static: return "static";
    case DriftKind::GaussianRandomWalk: return "gaussian_random_walk";
    case DriftKind::Ar1MultiTap: return "ar1_multi_tap";
    case DriftKind::PathLossMotion: return "path_loss_motion";
    }
    return "static";
}

DriftModel drift_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) schema_fail(path, "expected an object");
    if (!j.contains("kind")) schema_fail(path + ".kind", "missing");
    DriftModel d;
    d.kind = kind_from_string(j.at("kind").get<std::string>(), path + ".kind");
    auto opt = [&](const char* key, double& field) {
        if (j.contains(key)) field = get_number(j.at(key), path + "." + key);
    };
    opt("init_mean", d.init_mean);
    opt("init_std", d.init_std);
    opt("walk_std", d.walk_std);
    if (j.contains("taps")) d.taps = static_cast<int>(get_number(j.at("taps"), path + ".taps"));
    opt("ar_coeff", d.ar_coeff);
    opt("amplitude_scale", d.amplitude_scale);
    opt("fluctuation", d.fluctuation);
    opt("tap_decay", d.tap_decay);
    opt("phase_rate", d.phase_rate);
    opt("init_distance_m", d.init_distance_m);
    opt("speed_mps", d.speed_mps);
    opt("tick_seconds", d.tick_seconds);
    opt("pl_ref_db", d.pl_ref_db);
    opt("pl_slope_db", d.pl_slope_db);
    opt("min_distance_m", d.min_distance_m);
    opt("max_distance_m", d.max_distance_m);
    opt("eve_mean", d.eve_mean);
    opt("eve_std", d.eve_std);
    if (j.contains("eve_tracks_value")) {
        if (!j.at("eve_tracks_value").is_boolean())
            schema_fail(path + ".eve_tracks_value", "expected a boolean");
        d.eve_tracks_value = j.at("eve_tracks_value").get<bool>();
    }
    opt("eve_distance_lo_m", d.eve_distance_lo_m);
    opt("eve_distance_hi_m", d.eve_distance_hi_m);
    return d;
}

json drift_to_json(const DriftModel& d) {
    json j;
    j["kind"] = kind_to_string(d.kind);
    switch (d.kind) {
    case DriftKind::Static:
    case DriftKind::GaussianRandomWalk:
        j["init_mean"] = d.init_mean;
        j["init_std"] = d.init_std;
        j["walk_std"] = d.walk_std;
        j["eve_mean"] = d.eve_mean;
        j["eve_std"] = d.eve_std;
        j["eve_tracks_value"] = d.eve_tracks_value;
        break;
    case DriftKind::Ar1MultiTap:
        j["taps"] = d.taps;
        j["ar_coeff"] = d.ar_coeff;
        j["amplitude_scale"] = d.amplitude_scale;
        j["fluctuation"] = d.fluctuation;
        j["tap_decay"] = d.tap_decay;
        j["phase_rate"] = d.phase_rate;
        break;
    case DriftKind::PathLossMotion:
        j["init_distance_m"] = d.init_distance_m;
        j["speed_mps"] = d.speed_mps;
        j["tick_seconds"] = d.tick_seconds;
        j["pl_ref_db"] = d.pl_ref_db;
        j["pl_slope_db"] = d.pl_slope_db;
        j["min_distance_m"] = d.min_distance_m;
        j["max_distance_m"] = d.max_distance_m;
        j["eve_distance_lo_m"] = d.eve_distance_lo_m;
        j["eve_distance_hi_m"] = d.eve_distance_hi_m;
        break;
    }
    return j;
}

} // namespace

ScenarioConfig scenario_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw SchemaError(std::string("config error at $: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) schema_fail("$", "expected a JSON object");
    if (!j.contains("attributes") || !j.at("attributes").is_array())
        schema_fail("$.attributes", "expected an array of {name, lo, hi}");

    ScenarioConfig cfg;
    cfg.attributes.clear();
    std::size_t idx = 0;
    for (const auto& a : j.at("attributes")) {
        const std::string path = "$.attributes[" + std::to_string(idx) + "]";
        if (!a.is_object() || !a.contains("name") || !a.contains("lo") || !a.contains("hi"))
            schema_fail(path, "expected {name, lo, hi}");
        AttributeChannel c;
        c.spec.name = a.at("name").get<std::string>();
        c.spec.range_lo = get_number(a.at("lo"), path + ".lo");
        c.spec.range_hi = get_number(a.at("hi"), path + ".hi");
        cfg.attributes.push_back(std::move(c));
        ++idx;
    }

    auto find_channel = [&](const std::string& name, const std::string& path) -> AttributeChannel& {
        for (auto& c : cfg.attributes)
            if (c.spec.name == name) return c;
        schema_fail(path, "unknown attribute '" + name + "'");
    };

    if (j.contains("drift")) {
        if (!j.at("drift").is_object()) schema_fail("$.drift", "expected an object keyed by name");
        for (const auto& [name, dj] : j.at("drift").items()) {
            const std::string path = "$.drift." + name;
            find_channel(name, path).drift = drift_from_json(dj, path);
        }
    }
    if (j.contains("noise_std")) {
        if (!j.at("noise_std").is_object())
            schema_fail("$.noise_std", "expected an object keyed by name");
        for (const auto& [name, nj] : j.at("noise_std").items()) {
            const std::string path = "$.noise_std." + name;
            if (!nj.is_array() || nj.size() != 2)
                schema_fail(path, "expected [phase1_std, phase2_std]");
            AttributeChannel& c = find_channel(name, path);
            c.noise_std_phase1 = get_number(nj.at(0), path + "[0]");
            c.noise_std_phase2 = get_number(nj.at(1), path + "[1]");
        }
    }
    if (j.contains("eve_imitates")) {
        if (!j.at("eve_imitates").is_array()) schema_fail("$.eve_imitates", "expected an array");
        for (const auto& n : j.at("eve_imitates"))
            cfg.eve_imitates.push_back(n.get<std::string>());
    }
    if (j.contains("tau")) cfg.tau = static_cast<int>(get_number(j.at("tau"), "$.tau"));
    if (j.contains("eve_prior")) cfg.eve_prior = get_number(j.at("eve_prior"), "$.eve_prior");
    if (j.contains("trials")) cfg.trials = static_cast<long>(get_number(j.at("trials"), "$.trials"));
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
            schema_fail("$.seed", "expected an unsigned integer");
        cfg.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("mu")) cfg.mu = get_number(j.at("mu"), "$.mu");
    if (j.contains("safety")) {
        if (!j.at("safety").is_boolean()) schema_fail("$.safety", "expected a boolean");
        cfg.safety = j.at("safety").get<bool>();
    }
    if (j.contains("kernel")) {
        const auto& kj = j.at("kernel");
        if (!kj.is_object() || !kj.contains("sigma")) schema_fail("$.kernel", "expected {sigma}");
        const auto& sj = kj.at("sigma");
        if (sj.is_string()) {
            if (sj.get<std::string>() != "median")
                schema_fail("$.kernel.sigma", "expected \"median\" or a positive number");
            cfg.kernel = WidthConfig::median();
        } else {
            const double sigma = get_number(sj, "$.kernel.sigma");
            if (!(sigma > 0)) schema_fail("$.kernel.sigma", "must be > 0");
            cfg.kernel = WidthConfig::value(sigma);
        }
    }

    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw SchemaError(std::string("config error at $: ") + e.what());
    }
    return cfg;
}

std::string scenario_to_json_text(const ScenarioConfig& cfg) {
    json j;
    j["attributes"] = json::array();
    for (const auto& c : cfg.attributes)
        j["attributes"].push_back(
            {{"name", c.spec.name}, {"lo", c.spec.range_lo}, {"hi", c.spec.range_hi}});
    j["drift"] = json::object();
    j["noise_std"] = json::object();
    for (const auto& c : cfg.attributes) {
        j["drift"][c.spec.name] = drift_to_json(c.drift);
        j["noise_std"][c.spec.name] = {c.noise_std_phase1, c.noise_std_phase2};
    }
    j["eve_imitates"] = cfg.eve_imitates;
    j["tau"] = cfg.tau;
    j["eve_prior"] = cfg.eve_prior;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["mu"] = cfg.mu;
    j["kernel"]["sigma"] = cfg.kernel.use_median ? json("median") : json(cfg.kernel.fixed);
    j["safety"] = cfg.safety;
    return j.dump(2);
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("config error at $: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return scenario_from_json_text(ss.str());
}

} // namespace phyauth
