#include <iostream>
#include <sstream>
#include <fstream>
#include <string>

#include "CLI11.hpp"

#include "backaction/commands.h"
#include "backaction/config.h"
#include "backaction/errors.h"

using namespace backaction;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

std::vector<double> parse_taus(const std::string& text) {
    std::vector<double> out;
    std::stringstream fields(text);
    std::string field;
    while (std::getline(fields, field, ',')) {
        try {
            size_t used = 0;
            out.push_back(std::stod(field, &used));
            if (used != field.size()) {
                throw std::invalid_argument(field);
            }
        } catch (const std::exception&) {
            throw ConfigError("--snapshots expects comma-separated numbers, got '" + field + "'");
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Photodetection trajectories of atoms in an optical lattice inside a cavity"};
    std::string command;
    std::string config_path;
    std::string preset;
    std::string out_dir = ".";
    std::string snapshots;
    std::uint64_t seed = 0;
    int n_traj = 0;
    app.add_option("command", command, "trajectory | ensemble | purity-sweep | oracle-check")
        ->required()
        ->check(CLI::IsMember({"trajectory", "ensemble", "purity-sweep", "oracle-check"}));
    auto* config_opt = app.add_option("--config", config_path, "YAML configuration file");
    auto* preset_opt = app.add_option("--preset", preset, "built-in configuration (fig2 ... fig6)");
    config_opt->excludes(preset_opt);
    auto* seed_opt = app.add_option("--seed", seed, "override the configured seed");
    app.add_option("--out", out_dir, "output directory");
    auto* snap_opt = app.add_option("--snapshots", snapshots, "snapshot times in tau, comma separated");
    auto* ntraj_opt = app.add_option("--n-traj", n_traj, "ensemble size")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    try {
        if (!*config_opt && !*preset_opt) {
            throw ConfigError("one of --config or --preset is required");
        }
        RunConfig config = parse_config(*preset_opt ? preset_text(preset) : read_file(config_path));
        if (*seed_opt) config.seed = seed;
        if (*snap_opt) config.snapshot_taus = parse_taus(snapshots);
        if (*ntraj_opt) config.n_traj = n_traj;

        CommandOutput result;
        if (command == "trajectory") {
            result = cmd_trajectory(config, out_dir);
        } else if (command == "ensemble") {
            result = cmd_ensemble(config, out_dir);
        } else if (command == "purity-sweep") {
            result = cmd_purity_sweep(config, out_dir);
        } else {
            result = cmd_oracle_check(config, out_dir);
        }
        std::cout << result.summary << '\n';
        for (const auto& f : result.files) {
            std::cout << "  wrote " << f.string() << '\n';
        }
        return result.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kExitNumericalAbort;
    } catch (const ClassificationError& e) {
        std::cerr << "classification error: " << e.what() << '\n';
        return kExitClassification;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    }
}
