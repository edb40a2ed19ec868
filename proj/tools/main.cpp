// netsync: spectral synchronization criteria and time-domain simulation for
// networks of identical linear subsystems.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "netsync/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Stability and synchronization analysis for networks of linear subsystems"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    bool diagonal_init = false;

    auto* analyze = app.add_subcommand("analyze", "Run the spectral synchronization criterion");
    analyze->add_option("--config", config_path, "JSON configuration file")->required();

    auto* simulate = app.add_subcommand("simulate", "Integrate the closed-loop network");
    simulate->add_option("--config", config_path, "JSON configuration file")->required();
    simulate->add_option("--out", out_path, "Output CSV path")->required();
    simulate->add_option("--seed", seed, "Override the configured RNG seed");
    simulate->add_flag("--diagonal-init", diagonal_init,
                       "Start every node from the same random state");

    netsync::cli::SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "Sweep a config scalar and report verdicts");
    sweep->add_option("--config", config_path, "JSON configuration file")->required();
    sweep->add_option("--param", sweep_args.param, "Dot path of the scalar to sweep")->required();
    sweep->add_option("--from", sweep_args.from, "First parameter value")->required();
    sweep->add_option("--to", sweep_args.to, "Last parameter value")->required();
    sweep->add_option("--steps", sweep_args.steps, "Number of sweep points")->required();
    sweep->add_flag("--bisect", sweep_args.bisect, "Refine verdict boundaries to relative 1e-3");
    sweep->add_flag("--stability", sweep_args.stability,
                    "Test all coupling eigenvalues instead of the synchronization set");
    sweep->add_flag("--simulate,!--no-simulate", sweep_args.with_simulation,
                    "Run a simulation per sweep point (default on)");
    sweep->add_option("--seed", seed, "Override the configured RNG seed");
    sweep->add_option("--out", out_path, "Output CSV path (default: stdout)");

    auto* kernels = app.add_subcommand("kernels", "Dump the delay solution kernels p, f, g");
    kernels->add_option("--config", config_path, "JSON configuration file")->required();
    kernels->add_option("--out", out_path, "Output prefix for the three CSV files")->required();

    CLI11_PARSE(app, argc, argv);

    nlohmann::json config_json;
    try {
        config_json = netsync::load_json_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return netsync::cli::exit_usage;
    }

    if (analyze->parsed())
        return netsync::cli::cmd_analyze(config_json, std::cout, std::cerr);
    if (simulate->parsed())
        return netsync::cli::cmd_simulate(config_json, out_path, seed, diagonal_init, std::cerr);
    if (sweep->parsed()) {
        sweep_args.seed_override = seed;
        if (out_path.empty())
            return netsync::cli::cmd_sweep(config_json, sweep_args, std::cout, std::cerr);
        std::ofstream file(out_path, std::ios::binary);
        if (!file) {
            std::cerr << "error: cannot open output file: " << out_path << '\n';
            return netsync::cli::exit_io;
        }
        return netsync::cli::cmd_sweep(config_json, sweep_args, file, std::cerr);
    }
    if (kernels->parsed())
        return netsync::cli::cmd_kernels(config_json, out_path, std::cerr);
    return netsync::cli::exit_usage;
}
