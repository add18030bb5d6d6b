// gkpswitch: run switch experiments from a scenario config.
//
//   gkpswitch simulate --config scenario.conf [--seed N] [--out DIR] [--threads N]
//   gkpswitch optimize --config scenario.conf ...
//   gkpswitch sweep    --config scenario.conf ...
//
// The subcommand must agree with the config's experiment.kind:
//   simulate: rate
//   optimize: optimize-two | placement | optimize-multi
//   sweep:    dominant-sweep | fairness-sweep
//
// Exit codes: 0 success, 2 config error, 3 runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gkps/experiment.hpp"
#include "gkps/gkps.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "scenario config file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "override simulation.seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--out", args.out_dir, "output directory (default: config output.path)");
    cmd->add_option("--threads", args.threads, "worker threads for Monte Carlo prebuilds")
        ->check(CLI::PositiveNumber);
}

bool kind_matches(const std::string& subcommand, gkps::ExperimentKind kind) {
    using gkps::ExperimentKind;
    if (subcommand == "simulate") return kind == ExperimentKind::Rate;
    if (subcommand == "optimize")
        return kind == ExperimentKind::OptimizeTwo || kind == ExperimentKind::Placement ||
               kind == ExperimentKind::OptimizeMulti;
    return kind == ExperimentKind::DominantSweep || kind == ExperimentKind::FairnessSweep;
}

// On failures before run_experiment can run, still leave a machine-readable
// record behind.
void write_error_manifest(const std::string& out_dir, const std::string& error) {
    try {
        std::filesystem::create_directories(out_dir);
        nlohmann::json manifest;
        manifest["version"] = gkps::kVersion;
        manifest["status"] = "error";
        manifest["error"] = error;
        std::ofstream mf(std::filesystem::path(out_dir) / "manifest.json", std::ios::binary);
        mf << manifest.dump(2) << "\n";
    } catch (...) {
        // the error itself still goes to stderr
    }
}

int run(const std::string& subcommand, const CommonArgs& args) {
    std::string text;
    {
        std::ifstream in(args.config_path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        if (!in) {
            const std::string msg = "cannot read config file: " + args.config_path;
            std::cerr << "gkpswitch: " << msg << "\n";
            write_error_manifest(args.out_dir.empty() ? "results" : args.out_dir, msg);
            return 2;
        }
        text = buf.str();
    }

    gkps::ScenarioConfig cfg;
    try {
        cfg = gkps::parse_config(text);
    } catch (const std::exception& e) {
        std::cerr << "gkpswitch: " << e.what() << "\n";
        write_error_manifest(args.out_dir.empty() ? "results" : args.out_dir, e.what());
        return 2;
    }

    if (!kind_matches(subcommand, cfg.experiment)) {
        const std::string msg = "config: experiment.kind '" +
                                std::string(gkps::experiment_name(cfg.experiment)) +
                                "' does not belong to subcommand '" + subcommand + "'";
        std::cerr << "gkpswitch: " << msg << "\n";
        write_error_manifest(args.out_dir.empty() ? cfg.out_path : args.out_dir, msg);
        return 2;
    }

    if (args.seed_set) cfg.seed = args.seed;
    const std::string out_dir = args.out_dir.empty() ? cfg.out_path : args.out_dir;

    const gkps::RunResult result = gkps::run_experiment(cfg, out_dir, args.threads);
    if (result.exit_code != 0) {
        std::cerr << "gkpswitch: " << result.error << "\n";
        if (!result.manifest_path.empty())
            std::cerr << "gkpswitch: error record in " << result.manifest_path << "\n";
        return result.exit_code;
    }
    std::cout << "wrote " << result.table_path << "\n";
    std::cout << "wrote " << result.manifest_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo simulator and optimizer for a GKP-qubit photonic switch"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* simulate = app.add_subcommand("simulate", "evaluate a fixed allocation (rate)");
    CLI::App* optimize =
        app.add_subcommand("optimize", "allocation / placement / fairness-constrained search");
    CLI::App* sweep = app.add_subcommand("sweep", "dominant-client or fairness sweeps");
    add_common(simulate, args);
    add_common(optimize, args);
    add_common(sweep, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::string subcommand = app.get_subcommands().front()->get_name();
    try {
        return run(subcommand, args);
    } catch (const std::exception& e) {
        std::cerr << "gkpswitch: " << e.what() << "\n";
        return 3;
    }
}
