#include "backaction/geometry.h"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace backaction {

std::string_view to_string(Scenario scenario) {
    switch (scenario) {
        case Scenario::DiffractionMaximum:
            return "maximum";
        case Scenario::DiffractionMinimum:
            return "minimum";
        case Scenario::Transmission:
            return "transmission";
    }
    return "unknown";
}

std::string_view to_string(ZMeaning meaning) {
    return meaning == ZMeaning::AtomNumberAtKSites ? "atom_number_at_k_sites" : "odd_even_difference";
}

Scenario parse_scenario(std::string_view name) {
    if (name == "maximum") {
        return Scenario::DiffractionMaximum;
    }
    if (name == "minimum") {
        return Scenario::DiffractionMinimum;
    }
    if (name == "transmission") {
        return Scenario::Transmission;
    }
    throw std::invalid_argument("unknown scenario '" + std::string(name) +
                                "' (expected maximum, minimum or transmission)");
}

void LatticeSpec::validate() const {
    if (n_atoms < 1 || n_sites < 1 || n_illuminated < 1) {
        throw std::invalid_argument("lattice counts N, M, K must be positive");
    }
    if (n_illuminated > n_sites) {
        throw std::invalid_argument("K must not exceed M");
    }
    if (!(period > 0.0)) {
        throw std::invalid_argument("lattice period must be positive");
    }
    if (!mask.empty()) {
        if (static_cast<int>(mask.size()) != n_sites) {
            throw std::invalid_argument("illumination mask length must equal M");
        }
        int lit = 0;
        for (bool b : mask) {
            lit += b ? 1 : 0;
        }
        if (lit != n_illuminated) {
            throw std::invalid_argument("illumination mask must mark exactly K sites");
        }
    }
}

std::vector<int> LatticeSpec::illuminated_sites() const {
    std::vector<int> sites;
    sites.reserve(static_cast<size_t>(n_illuminated));
    if (mask.empty()) {
        for (int j = 1; j <= n_illuminated; ++j) {
            sites.push_back(j);
        }
    } else {
        for (int j = 1; j <= n_sites; ++j) {
            if (mask[static_cast<size_t>(j - 1)]) {
                sites.push_back(j);
            }
        }
    }
    return sites;
}

int LatticeSpec::odd_illuminated_count() const {
    int q = 0;
    for (int j : illuminated_sites()) {
        q += j % 2;
    }
    return q;
}

std::complex<double> mode_value(const ModeFunction& mode, int site, const LatticeSpec& spec) {
    if (site < 1 || site > spec.n_sites) {
        throw std::out_of_range("site index " + std::to_string(site) + " outside 1.." +
                                std::to_string(spec.n_sites));
    }
    double arg = site * mode.projected_wavenumber * spec.period + mode.phase;
    if (mode.kind == ModeKind::Traveling) {
        return std::polar(1.0, arg);
    }
    return {std::cos(arg), 0.0};
}

std::complex<double> coupling_coefficient(std::span<const int> occupations,
                                          const ModeFunction& mode_l,
                                          const ModeFunction& mode_m,
                                          const LatticeSpec& spec) {
    if (static_cast<int>(occupations.size()) != spec.n_sites) {
        throw std::invalid_argument("configuration length must equal the number of sites");
    }
    for (int q : occupations) {
        if (q < 0) {
            throw std::invalid_argument("site occupations must be nonnegative");
        }
    }
    std::complex<double> total = 0.0;
    for (int j : spec.illuminated_sites()) {
        int q = occupations[static_cast<size_t>(j - 1)];
        if (q != 0) {
            total += std::conj(mode_value(mode_l, j, spec)) * mode_value(mode_m, j, spec) * static_cast<double>(q);
        }
    }
    return total;
}

MeasuredModes diffraction_maximum_modes(double) {
    ModeFunction cavity{ModeKind::Traveling, 0.0, 0.0};
    ModeFunction probe{ModeKind::Traveling, 0.0, 0.0};
    return {cavity, probe};
}

MeasuredModes diffraction_minimum_modes(double period) {
    ModeFunction cavity{ModeKind::Traveling, 0.0, 0.0};
    ModeFunction probe{ModeKind::Traveling, std::numbers::pi / period, std::numbers::pi};
    return {cavity, probe};
}

MeasuredModes transmission_modes(double period) {
    // Any angle works for a traveling cavity wave since |u_1|^2 = 1.
    ModeFunction cavity{ModeKind::Traveling, 0.3 * std::numbers::pi / period, 0.0};
    return {cavity, cavity};
}

MeasuredModes measured_modes(Scenario scenario, double period) {
    switch (scenario) {
        case Scenario::DiffractionMaximum:
            return diffraction_maximum_modes(period);
        case Scenario::DiffractionMinimum:
            return diffraction_minimum_modes(period);
        case Scenario::Transmission:
            return transmission_modes(period);
    }
    throw std::invalid_argument("unknown scenario");
}

int statistical_variable(std::span<const int> occupations, Scenario scenario, const LatticeSpec& spec) {
    auto modes = measured_modes(scenario, spec.period);
    auto d = coupling_coefficient(occupations, modes.left, modes.right, spec);
    double rounded = std::round(d.real());
    if (std::abs(d.imag()) > 1e-9 || std::abs(d.real() - rounded) > 1e-9) {
        throw std::domain_error("coupling coefficient is not an integer-valued real number");
    }
    return static_cast<int>(rounded);
}

ScenarioGeometry scenario_geometry(Scenario scenario, const LatticeSpec& spec) {
    spec.validate();
    ScenarioGeometry geometry;
    geometry.scenario = scenario;
    const int n = spec.n_atoms;
    if (scenario == Scenario::DiffractionMinimum) {
        if (spec.n_illuminated != spec.n_sites) {
            throw std::invalid_argument("diffraction minimum requires all sites illuminated (K == M)");
        }
        geometry.meaning = ZMeaning::OddEvenDifference;
        for (int z = -n; z <= n; z += 2) {
            geometry.z_grid.push_back(z);
        }
    } else {
        geometry.meaning = ZMeaning::AtomNumberAtKSites;
        for (int z = 0; z <= n; ++z) {
            geometry.z_grid.push_back(z);
        }
    }
    return geometry;
}

}  // namespace backaction
