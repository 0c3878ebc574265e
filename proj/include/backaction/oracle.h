#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "backaction/geometry.h"
#include "backaction/optics.h"
#include "backaction/states.h"

namespace backaction {

/// All occupation vectors of n_atoms over n_sites in lexicographic order.
std::vector<std::vector<int>> compositions(int n_atoms, int n_sites);

/// Superfluid expansion coefficients sqrt(N! / (prod q_j! M^N)) for each configuration.
std::vector<std::complex<double>> superfluid_coefficients(const std::vector<std::vector<int>>& configs, int n_sites);

/// Joint atom-configuration x truncated photon-number amplitudes psi(q, n).
/// The state is kept normalized; the discarded log norm is accumulated.
class JointState {
   public:
    JointState(std::vector<std::vector<int>> configs, Eigen::MatrixXcd amplitudes);

    /// sum_q c_q |q>|0>.
    static JointState product_vacuum(std::vector<std::vector<int>> configs,
                                     const std::vector<std::complex<double>>& coefficients, int photon_cutoff);

    const std::vector<std::vector<int>>& configs() const { return configs_; }
    const Eigen::MatrixXcd& amplitudes() const { return psi_; }
    int photon_cutoff() const { return static_cast<int>(psi_.cols()) - 1; }
    double log_norm() const { return log_norm_; }

    /// Weight on the two highest photon numbers relative to the total.
    double tail_mass() const;
    /// Norm squared of configuration q's photon branch.
    double branch_weight(size_t q) const;
    /// |<beta|psi_q>|^2 / <psi_q|psi_q> for the coherent state |beta>.
    double coherent_fidelity(size_t q, std::complex<double> beta) const;

    /// Pads the photon space with vacuum amplitudes.
    void enlarge_cutoff(int photon_cutoff);
    /// Renormalizes, adding log of the removed squared norm to log_norm().
    void renormalize();

    Eigen::MatrixXcd& mutable_amplitudes() { return psi_; }

   private:
    std::vector<std::vector<int>> configs_;
    Eigen::MatrixXcd psi_;
    double log_norm_ = 0.0;
};

struct OracleSettings {
    double tolerance = 1e-10;
    double tail_bound = 1e-10;
    double initial_step = 0.01;
};

/// Integrates i d psi/dt = H_eff psi over `duration`, with
/// H_eff = (U11 D11 - Delta_p - i kappa) n + (U10 D10 a0 + i eta) a^dag + h.c. of the
/// drive, per configuration. The dispersive term is dropped outside transmission,
/// matching the optics module. Enlarges the photon cutoff and retries when the tail
/// grows past the bound.
void evolve_nonhermitian(JointState& state, const ProbeModel& model, const LatticeSpec& lattice, double duration,
                         const OracleSettings& settings = {});

/// psi(q, n) <- sqrt(n+1) psi(q, n+1), renormalized. Throws NumericalAbort on a vacuum state.
void apply_jump(JointState& state);

/// p(z) summed over photon numbers and configurations sharing z.
ZDistribution z_marginal(const JointState& state, const ScenarioGeometry& geometry, const LatticeSpec& lattice);

/// Count record replayed on both the oracle and the reduced model.
struct OracleScript {
    /// Transient settling time before the first count; > several 1/kappa.
    double settle_time = 20.0;
    /// Absolute count times, each >= settle_time, nondecreasing.
    std::vector<double> jump_times;
    double final_time = 0.0;
};

struct EquivalenceResult {
    ZDistribution oracle;
    ZDistribution reduced;
    double max_abs_difference = 0.0;
    int photon_cutoff = 0;
};

/// Runs the script from the superfluid state with the cavity in vacuum and
/// compares the oracle's z-marginal with the trajectory module, whose starting
/// point at settle_time is p0 weighted by the transient prefactor.
EquivalenceResult check_equivalence(const ProbeModel& model, const LatticeSpec& lattice, const OracleScript& script,
                                    const OracleSettings& settings = {});

}  // namespace backaction
