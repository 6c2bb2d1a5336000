// lmdyn.cpp — Command-line entry point: run, sweep, compare, distribution

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lmdyn/config.hpp"
#include "lmdyn/runner.hpp"
#include "lmdyn/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"lmdyn — variational, semiclassical, and exact dynamics of driven "
                 "quantum systems coupled to coherent-state fields"};
    app.set_version_flag("--version", lmdyn::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "Execute the engines of a run configuration");
    run_cmd->add_option("config", config_path, "JSON configuration file")->required();

    std::string sweep_path;
    auto* sweep_cmd = app.add_subcommand("sweep", "Expand a parameter grid into independent runs");
    sweep_cmd->add_option("config", sweep_path, "JSON configuration file with a sweep section")
        ->required();

    std::string cmp_a, cmp_b, cmp_out;
    std::vector<std::string> cmp_cols;
    double cmp_tol = 0.0;
    auto* cmp_cmd = app.add_subcommand("compare", "Column-wise comparison of two result CSVs");
    cmp_cmd->add_option("a", cmp_a, "first CSV")->required();
    cmp_cmd->add_option("b", cmp_b, "second CSV")->required();
    cmp_cmd->add_option("--cols", cmp_cols, "columns to compare (default: shared columns)")
        ->delimiter(',');
    cmp_cmd->add_option("--tol", cmp_tol, "max-abs tolerance")->required();
    cmp_cmd->add_option("--out", cmp_out, "write the JSON report here instead of stdout");

    std::string dist_path;
    auto* dist_cmd = app.add_subcommand(
        "distribution", "Run the enabled engines but write only photon-number distributions");
    dist_cmd->add_option("config", dist_path, "JSON configuration file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            const auto cfg = lmdyn::io::load_config(config_path);
            const auto outcome = lmdyn::cli::run_config(cfg);
            if (outcome.exit_code != 0) std::cerr << "run failed: " << outcome.failure << "\n";
            return outcome.exit_code;
        }
        if (sweep_cmd->parsed()) {
            const auto cfg = lmdyn::io::load_config(sweep_path);
            return lmdyn::cli::run_sweep(cfg);
        }
        if (cmp_cmd->parsed()) return lmdyn::cli::run_compare(cmp_a, cmp_b, cmp_cols, cmp_tol, cmp_out);
        if (dist_cmd->parsed()) {
            auto cfg = lmdyn::io::load_config(dist_path);
            if (!cfg.observables.distribution)
                throw lmdyn::ConfigError("distribution: config has no observables.distribution");
            const auto outcome =
                lmdyn::cli::run_config(cfg, /*trajectories=*/false, /*distributions=*/true);
            if (outcome.exit_code != 0) std::cerr << "run failed: " << outcome.failure << "\n";
            return outcome.exit_code;
        }
    } catch (const lmdyn::ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return lmdyn::cli::kExitConfigError;
    } catch (const lmdyn::GridMismatchError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return lmdyn::cli::kExitEngineError;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return lmdyn::cli::kExitEngineError;
    }
    return 0;
}
