#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "backaction/geometry.h"
#include "backaction/optics.h"
#include "backaction/states.h"
#include "backaction/trajectory.h"

namespace backaction {

enum class InitialState { Superfluid, Mott, File };

/// Everything a CLI run needs, read from a flat YAML document.
struct RunConfig {
    Scenario scenario = Scenario::Transmission;
    LatticeSpec lattice;
    double kappa = 1.0;
    /// |C| for transverse probing, C' = eta/kappa for transmission.
    double coupling_scale = 1.0;
    double kappa_over_u11 = 1.0;
    double z_p = 0.0;
    InitialState initial = InitialState::Superfluid;
    std::string initial_file;

    std::uint64_t seed = 0;
    double max_jump_probability = 0.05;
    double max_tau = 0.0;
    double min_tau = 0.0;
    double residual_mass = 1e-9;
    double sample_interval_tau = 0.0;
    std::vector<double> snapshot_taus;

    int n_traj = 100;
    std::vector<double> histogram_taus;

    std::vector<int> purity_losses{0, 1, 3, 10};
    double purity_splitting_max = 10.0;
    int purity_splitting_points = 401;

    ProbeModel probe_model() const;
    ZDistribution initial_distribution() const;
    TrajectorySetup trajectory_setup() const;
};

/// Parses and validates a configuration. Unknown keys, missing required keys
/// (all of them are listed) and constraint violations throw ConfigError.
RunConfig parse_config(std::string_view text);

/// Names of the presets compiled into the binary.
std::vector<std::string> preset_names();
/// YAML text of a preset; throws ConfigError for an unknown name.
std::string preset_text(std::string_view name);

}  // namespace backaction
