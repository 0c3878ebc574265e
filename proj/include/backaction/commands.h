#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "backaction/config.h"

namespace backaction {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalAbort = 3;
inline constexpr int kExitClassification = 4;

struct CommandOutput {
    std::vector<std::filesystem::path> files;
    int exit_code = kExitOk;
    /// One-line human-readable result.
    std::string summary;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// trajectory.csv, outcome.json and, when snapshots are configured, snapshots.csv.
CommandOutput cmd_trajectory(const RunConfig& config, const std::filesystem::path& out_dir);

/// Per-trajectory outcomes, singlet/doublet frequencies and count histograms at
/// histogram_taus next to the closed-form distribution.
CommandOutput cmd_ensemble(const RunConfig& config, const std::filesystem::path& out_dir);

/// purity_sweep.csv with columns delta_z, L, purity.
CommandOutput cmd_purity_sweep(const RunConfig& config, const std::filesystem::path& out_dir);

/// Compares the reduced model with the full joint-state integration on N = 2..4
/// atoms over two sites for the configured scenario.
CommandOutput cmd_oracle_check(const RunConfig& config, const std::filesystem::path& out_dir);

}  // namespace backaction
