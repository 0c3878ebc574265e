#pragma once

#include <complex>
#include <span>
#include <string_view>
#include <vector>

namespace backaction {

/// Probe/cavity arrangement that decides which collective atomic variable the
/// scattered light measures.
enum class Scenario { DiffractionMaximum, DiffractionMinimum, Transmission };

/// What the scalar statistical variable z counts.
enum class ZMeaning { AtomNumberAtKSites, OddEvenDifference };

std::string_view to_string(Scenario scenario);
std::string_view to_string(ZMeaning meaning);

/// Parses "maximum", "minimum" or "transmission" (case-sensitive).
Scenario parse_scenario(std::string_view name);

/// One-dimensional lattice with N atoms on M sites, K of which are illuminated.
struct LatticeSpec {
    int n_atoms = 0;
    int n_sites = 0;
    int n_illuminated = 0;
    double period = 1.0;
    /// Optional illumination pattern of length n_sites. When empty the
    /// contiguous block of sites 1..K is illuminated.
    std::vector<bool> mask;

    void validate() const;
    /// 1-based indices of illuminated sites in increasing order.
    std::vector<int> illuminated_sites() const;
    /// Number of illuminated odd sites (Q). Equals ceil(K/2) for contiguous illumination.
    int odd_illuminated_count() const;
};

enum class ModeKind { Traveling, Standing };

/// Plane-wave mode evaluated at lattice sites x_j = j d.
struct ModeFunction {
    ModeKind kind = ModeKind::Traveling;
    /// k_x = |k| sin(theta), in inverse units of the lattice period.
    double projected_wavenumber = 0.0;
    /// Site-independent phase offset (plane-wave approximation).
    double phase = 0.0;
};

/// u(r_j) = exp(i(j k_x d + phi)) for traveling waves, cos(j k_x d + phi) for standing waves.
/// Throws std::out_of_range unless 1 <= site <= n_sites.
std::complex<double> mode_value(const ModeFunction& mode, int site, const LatticeSpec& spec);

/// D^q_{lm} = sum over illuminated sites of conj(u_l(r_j)) u_m(r_j) q_j.
/// Throws std::invalid_argument when the configuration length differs from
/// n_sites or any occupation is negative.
std::complex<double> coupling_coefficient(std::span<const int> occupations,
                                          const ModeFunction& mode_l,
                                          const ModeFunction& mode_m,
                                          const LatticeSpec& spec);

/// The ordered mode pair whose coupling coefficient is the measured variable.
struct MeasuredModes {
    ModeFunction left;
    ModeFunction right;
};

/// Bragg geometry: conj(u_1) u_0 = 1 at every site, so D_10 = N_K.
MeasuredModes diffraction_maximum_modes(double period);
/// Neighbouring sites scatter with a pi phase difference: conj(u_1) u_0 = (-1)^(j+1).
MeasuredModes diffraction_minimum_modes(double period);
/// Traveling cavity mode probed through the mirror: D_11 = sum |u_1|^2 q_j = N_K.
MeasuredModes transmission_modes(double period);
MeasuredModes measured_modes(Scenario scenario, double period);

/// Value of z for a concrete site configuration q. Throws std::domain_error if
/// the coupling is not an integer-valued real number.
int statistical_variable(std::span<const int> occupations, Scenario scenario, const LatticeSpec& spec);

struct ScenarioGeometry {
    Scenario scenario = Scenario::Transmission;
    std::vector<int> z_grid;
    ZMeaning meaning = ZMeaning::AtomNumberAtKSites;
};

/// Admissible z values for the scenario. DiffractionMinimum requires K == M.
ScenarioGeometry scenario_geometry(Scenario scenario, const LatticeSpec& spec);

}  // namespace backaction
