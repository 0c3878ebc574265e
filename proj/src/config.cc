#include "backaction/config.h"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "backaction/errors.h"

namespace backaction {

namespace {

const std::vector<std::string> kRequired = {"scenario", "n_atoms", "n_sites", "n_illuminated",
                                            "coupling_scale", "seed", "max_tau"};
const std::vector<std::string> kRequiredTransmission = {"kappa_over_u11", "z_p"};
const std::set<std::string> kOptional = {"period",
                                         "kappa",
                                         "kappa_over_u11",
                                         "z_p",
                                         "initial_state",
                                         "initial_file",
                                         "max_jump_probability",
                                         "min_tau",
                                         "residual_mass",
                                         "sample_interval_tau",
                                         "snapshot_taus",
                                         "n_traj",
                                         "histogram_taus",
                                         "purity_losses",
                                         "purity_splitting_max",
                                         "purity_splitting_points"};

[[noreturn]] void violated(const std::string& rule, const std::string& detail = "") {
    throw ConfigError("constraint violated [" + rule + "]" + (detail.empty() ? "" : ": " + detail));
}

class Document {
   public:
    explicit Document(const YAML::Node& root) {
        for (const auto& item : root) {
            std::string key = item.first.as<std::string>();
            if (item.second.IsMap()) {
                throw ConfigError("key '" + key + "' must hold a scalar or a list, not a mapping");
            }
            if (!values_.emplace(key, item.second).second) {
                throw ConfigError("duplicate key '" + key + "'");
            }
        }
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, YAML::Node>& values() const { return values_; }

    template <typename T>
    T scalar(const std::string& key, const char* what) const {
        const YAML::Node& node = values_.at(key);
        if (!node.IsScalar()) {
            throw ConfigError("key '" + key + "' must be " + what);
        }
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError("key '" + key + "' must be " + what + ", got '" + node.Scalar() + "'");
        }
    }

    double number(const std::string& key) const { return scalar<double>(key, "a number"); }

    int integer(const std::string& key) const {
        auto v = scalar<long long>(key, "an integer");
        if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
            throw ConfigError("key '" + key + "' is out of range");
        }
        return static_cast<int>(v);
    }

    template <typename T>
    std::vector<T> list(const std::string& key, const char* what) const {
        const YAML::Node& node = values_.at(key);
        std::vector<T> out;
        try {
            if (node.IsSequence()) {
                for (const auto& item : node) {
                    out.push_back(item.as<T>());
                }
            } else if (node.IsScalar()) {
                std::string text = node.Scalar();
                std::replace(text.begin(), text.end(), ',', ' ');
                std::istringstream fields(text);
                std::string field;
                while (fields >> field) {
                    out.push_back(YAML::Load(field).as<T>());
                }
            }
        } catch (const YAML::Exception&) {
            throw ConfigError("key '" + key + "' must be a list of " + what);
        }
        return out;
    }

   private:
    std::map<std::string, YAML::Node> values_;
};

InitialState parse_initial(const std::string& text) {
    if (text == "superfluid") {
        return InitialState::Superfluid;
    }
    if (text == "mott") {
        return InitialState::Mott;
    }
    if (text == "file") {
        return InitialState::File;
    }
    throw ConfigError("initial_state must be superfluid, mott or file, got '" + text + "'");
}

void validate(const RunConfig& c) {
    try {
        c.lattice.validate();
    } catch (const std::invalid_argument& e) {
        violated("lattice", e.what());
    }
    if (c.scenario == Scenario::DiffractionMinimum && c.lattice.n_illuminated != c.lattice.n_sites) {
        violated("minimum requires n_illuminated == n_sites");
    }
    if (c.scenario == Scenario::DiffractionMinimum && c.initial == InitialState::Superfluid &&
        c.lattice.n_sites % 2 != 0) {
        violated("minimum superfluid requires an even n_sites");
    }
    if (c.initial == InitialState::Mott && c.lattice.n_atoms != c.lattice.n_sites) {
        violated("mott requires n_atoms == n_sites");
    }
    if (c.initial == InitialState::File && c.initial_file.empty()) {
        violated("initial_state file requires initial_file");
    }
    if (!(c.kappa > 0.0)) {
        violated("kappa > 0");
    }
    if (!(c.coupling_scale > 0.0)) {
        violated("coupling_scale > 0");
    }
    if (c.scenario == Scenario::Transmission && !(c.kappa_over_u11 != 0.0)) {
        violated("kappa_over_u11 != 0");
    }
    if (!(c.max_tau > 0.0)) {
        violated("max_tau > 0");
    }
    if (!(c.max_jump_probability > 0.0) || c.max_jump_probability > 0.05) {
        violated("0 < max_jump_probability <= 0.05");
    }
    if (c.min_tau < 0.0 || c.sample_interval_tau < 0.0) {
        violated("min_tau and sample_interval_tau must be nonnegative");
    }
    for (double tau : c.snapshot_taus) {
        if (tau < 0.0) {
            violated("snapshot_taus must be nonnegative");
        }
    }
    for (double tau : c.histogram_taus) {
        if (!(tau > 0.0)) {
            violated("histogram_taus must be positive");
        }
    }
    if (c.n_traj < 1) {
        violated("n_traj >= 1");
    }
    for (int l : c.purity_losses) {
        if (l < 0) {
            violated("purity_losses must be nonnegative");
        }
    }
    if (c.purity_splitting_points < 2 || !(c.purity_splitting_max > 0.0)) {
        violated("purity sweep needs at least 2 points and a positive range");
    }
    try {
        c.probe_model().validate();
    } catch (const std::invalid_argument& e) {
        violated("probe model", e.what());
    }
}

}  // namespace

ProbeModel RunConfig::probe_model() const {
    if (scenario == Scenario::Transmission) {
        return ProbeModel::transmission(kappa, kappa_over_u11, z_p, coupling_scale);
    }
    return ProbeModel::transverse(scenario, kappa, coupling_scale);
}

ZDistribution RunConfig::initial_distribution() const {
    auto geometry = scenario_geometry(scenario, lattice);
    switch (initial) {
        case InitialState::Superfluid:
            return scenario == Scenario::DiffractionMinimum ? superfluid_difference(lattice)
                                                            : superfluid_atom_number(lattice);
        case InitialState::Mott:
            return mott_distribution(lattice, geometry);
        case InitialState::File: {
            std::ifstream in(initial_file);
            if (!in) {
                throw ConfigError("cannot open initial_file '" + initial_file + "'");
            }
            return read_distribution(in, geometry.meaning).distribution;
        }
    }
    throw ConfigError("unknown initial state");
}

TrajectorySetup RunConfig::trajectory_setup() const {
    TrajectorySetup setup{probe_model(), initial_distribution(), {}, {}, {}};
    setup.step.max_jump_probability = max_jump_probability;
    setup.stop = {max_tau, min_tau, residual_mass};
    setup.schedule = {sample_interval_tau, snapshot_taus};
    return setup;
}

RunConfig parse_config(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what());
    }
    if (!root.IsNull() && !root.IsMap()) {
        throw ConfigError("configuration must be a flat key-value document");
    }
    Document doc(root);

    std::vector<std::string> unknown;
    for (const auto& [key, node] : doc.values()) {
        if (std::find(kRequired.begin(), kRequired.end(), key) == kRequired.end() && kOptional.count(key) == 0) {
            unknown.push_back(key);
        }
    }
    if (!unknown.empty()) {
        std::string msg = "unknown keys:";
        for (const auto& k : unknown) {
            msg += " " + k;
        }
        throw ConfigError(msg);
    }

    std::vector<std::string> missing;
    for (const auto& key : kRequired) {
        if (!doc.has(key)) {
            missing.push_back(key);
        }
    }
    RunConfig c;
    if (doc.has("scenario")) {
        try {
            c.scenario = parse_scenario(doc.scalar<std::string>("scenario", "a scenario name"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (c.scenario == Scenario::Transmission) {
            for (const auto& key : kRequiredTransmission) {
                if (!doc.has(key)) {
                    missing.push_back(key);
                }
            }
        }
    }
    if (!missing.empty()) {
        std::string msg = "missing required keys:";
        for (const auto& k : missing) {
            msg += " " + k;
        }
        throw ConfigError(msg);
    }

    c.lattice.n_atoms = doc.integer("n_atoms");
    c.lattice.n_sites = doc.integer("n_sites");
    c.lattice.n_illuminated = doc.integer("n_illuminated");
    c.coupling_scale = doc.number("coupling_scale");
    c.seed = doc.scalar<std::uint64_t>("seed", "a nonnegative integer");
    c.max_tau = doc.number("max_tau");
    if (doc.has("period")) c.lattice.period = doc.number("period");
    if (doc.has("kappa")) c.kappa = doc.number("kappa");
    if (doc.has("kappa_over_u11")) c.kappa_over_u11 = doc.number("kappa_over_u11");
    if (doc.has("z_p")) c.z_p = doc.number("z_p");
    if (doc.has("initial_state")) c.initial = parse_initial(doc.scalar<std::string>("initial_state", "a name"));
    if (doc.has("initial_file")) c.initial_file = doc.scalar<std::string>("initial_file", "a path");
    if (doc.has("max_jump_probability")) c.max_jump_probability = doc.number("max_jump_probability");
    if (doc.has("min_tau")) c.min_tau = doc.number("min_tau");
    if (doc.has("residual_mass")) c.residual_mass = doc.number("residual_mass");
    if (doc.has("sample_interval_tau")) c.sample_interval_tau = doc.number("sample_interval_tau");
    if (doc.has("snapshot_taus")) c.snapshot_taus = doc.list<double>("snapshot_taus", "numbers");
    if (doc.has("n_traj")) c.n_traj = doc.integer("n_traj");
    if (doc.has("histogram_taus")) c.histogram_taus = doc.list<double>("histogram_taus", "numbers");
    if (doc.has("purity_losses")) c.purity_losses = doc.list<int>("purity_losses", "integers");
    if (doc.has("purity_splitting_max")) c.purity_splitting_max = doc.number("purity_splitting_max");
    if (doc.has("purity_splitting_points")) c.purity_splitting_points = doc.integer("purity_splitting_points");

    validate(c);
    return c;
}

}  // namespace backaction
