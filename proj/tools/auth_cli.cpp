#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "phyauth/experiment.hpp"
#include "phyauth/phy_sim.hpp"

int main(int argc, char** argv) {
    CLI::App app{"phyauth - adaptive physical-layer authentication experiments"};
    app.require_subcommand(1);

    // run ---------------------------------------------------------------
    auto* run = app.add_subcommand("run", "run a named preset or a scenario config file");
    std::string target;
    phyauth::RunOptions options;
    std::uint64_t seed = 0;
    long trials = 0;
    std::string format = "csv,svg";
    run->add_option("target", target, "preset name or path to a config.json")->required();
    if (const char* env_dir = std::getenv("PHYAUTH_OUT")) options.out_dir = env_dir;
    auto* out_opt =
        run->add_option("--out", options.out_dir, "output directory (default: $PHYAUTH_OUT)");
    if (options.out_dir.empty()) out_opt->required();
    auto* seed_opt = run->add_option("--seed", seed, "seed override");
    auto* trials_opt = run->add_option("--trials", trials, "test-trial count override");
    run->add_option("--jobs", options.jobs, "parallel Monte Carlo workers")
        ->check(CLI::PositiveNumber);
    run->add_option("--format", format, "comma list of csv,svg (csv is always written)");

    // list-presets --------------------------------------------------------
    auto* list = app.add_subcommand("list-presets", "list available experiment presets");

    // validate ------------------------------------------------------------
    auto* validate = app.add_subcommand("validate", "check a scenario config file");
    std::string config_path;
    validate->add_option("config", config_path, "path to a config.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*list) {
            for (const auto& p : phyauth::experiment_presets())
                std::cout << p.name << "  -  " << p.description << "\n";
            return 0;
        }
        if (*validate) {
            phyauth::load_scenario(config_path);
            std::cout << "OK: " << config_path << "\n";
            return 0;
        }
        if (*seed_opt) options.seed = seed;
        if (*trials_opt) options.trials = trials;
        options.svg = format.find("svg") != std::string::npos;
        const phyauth::Manifest m = phyauth::run_experiment(target, options);
        std::cout << m.preset << ": " << m.outputs.size() << " artifacts in " << options.out_dir
                  << " (" << m.wall_time_s << " s)\n"
                  << "manifest: " << m.path << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
