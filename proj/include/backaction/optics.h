#pragma once

#include <complex>
#include <vector>

#include "backaction/geometry.h"

namespace backaction {

/// Drive and cavity parameters. Couplings are given directly as frequencies;
/// the microscopic atom-light constants are folded into u10 and u11.
struct ProbeModel {
    Scenario scenario = Scenario::Transmission;
    double kappa = 1.0;                  ///< cavity decay rate
    double u10 = 0.0;                    ///< probe-cavity scattering coupling
    double u11 = 0.0;                    ///< dispersive cavity shift per atom
    std::complex<double> a0{0.0, 0.0};   ///< transverse probe amplitude
    std::complex<double> eta{0.0, 0.0};  ///< drive through the mirror
    double delta_p = 0.0;                ///< probe-cavity detuning
    std::complex<double> alpha0{0.0, 0.0};

    /// Throws std::invalid_argument when the scenario constraints are violated.
    void validate() const;

    /// Mirror-driven cavity parameterized by kappa/U11, z_p and the resonant amplitude C' = eta/kappa.
    static ProbeModel transmission(double kappa, double kappa_over_u11, double z_p, double resonant_amplitude);
    /// Transverse probing with Delta_p = 0 and |C| = coupling_scale.
    static ProbeModel transverse(Scenario scenario, double kappa, double coupling_scale);
};

/// Cavity frequency shift entering the steady amplitude for a given z. The
/// transverse scenarios neglect it (U11 z << kappa).
double dispersive_shift(const ProbeModel& model, int z);

/// C for the transverse scenarios, C' = eta/kappa for transmission.
std::complex<double> amplitude_scale(const ProbeModel& model);

/// z_p = Delta_p / U11. Transmission only.
double resonance_center(const ProbeModel& model);

/// Rate converting elapsed time to the dimensionless tau = 2 |C|^2 kappa t.
double tau_per_time(const ProbeModel& model);

/// Steady (t > 1/kappa) coherent amplitude for the statistical value z.
std::complex<double> steady_amplitude(const ProbeModel& model, int z);

/// Slowly-varying amplitude including the decaying transient from alpha0.
std::complex<double> transient_amplitude(const ProbeModel& model, int z, double t);

/// Steady-regime prefactor exponent Phi_z(t); the real part damps, the
/// imaginary part is the accumulated phase.
std::complex<double> prefactor_exponent(const ProbeModel& model, int z, double t);

/// Phi_z(t) by adaptive quadrature of the full transient integrand. Valid for all t >= 0.
std::complex<double> prefactor_exponent_transient(const ProbeModel& model, int z, double t);

/// Light phase of the upper doublet component: -arctan(U11 dz / kappa).
double cat_phase(const ProbeModel& model, double delta_z);

/// Mean phase drift <m> phi + Phi per unit time for a transmission doublet
/// with splitting delta_z.
double cat_phase_drift_rate(const ProbeModel& model, double delta_z);

/// The positive root of 2 arctan(x) = x: the value of U11 dz / kappa at which
/// the mean count phase cancels the deterministic phase.
double phase_balance_splitting();

/// Per-z amplitudes computed once per run and shared read-only.
struct AmplitudeTable {
    std::vector<int> z_values;
    std::vector<std::complex<double>> alpha;
    std::vector<double> intensity;  ///< |alpha_z|^2
    std::complex<double> c_constant;
    double z_p = 0.0;               ///< NaN outside the transmission scenario

    double reduced_scale() const { return std::norm(c_constant); }
};

AmplitudeTable amplitude_table(const ProbeModel& model, const std::vector<int>& z_values);

}  // namespace backaction
