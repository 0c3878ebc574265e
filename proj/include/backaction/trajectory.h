#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "backaction/optics.h"
#include "backaction/states.h"

namespace backaction {

/// Conditional atom-number distribution p(z, m, t) together with the count
/// record. Normalization is applied after every update, so the norm F(t) is
/// implicit; the logarithm of the discarded normalization is kept in log_norm().
class TrajectoryState {
   public:
    /// The amplitude table must be indexed like the distribution's z grid.
    TrajectoryState(ZDistribution initial, std::shared_ptr<const AmplitudeTable> amplitudes, double kappa);

    const ZDistribution& dist() const { return dist_; }
    int m() const { return static_cast<int>(jump_times_.size()); }
    double t() const { return t_; }
    /// tau = 2 |C|^2 kappa t (tau' with C' in the transmission scenario).
    double tau() const { return t_ * tau_rate_; }
    double kappa() const { return kappa_; }
    double tau_rate() const { return tau_rate_; }
    const std::vector<double>& jump_times() const { return jump_times_; }
    const AmplitudeTable& amplitudes() const { return *amplitudes_; }
    std::shared_ptr<const AmplitudeTable> shared_amplitudes() const { return amplitudes_; }
    double log_norm() const { return log_norm_; }

    /// <a^dag a>_c = sum |alpha_z|^2 p(z).
    double mean_intensity() const;
    /// 2 kappa <a^dag a>_c dt.
    double jump_probability(double dt) const;
    /// Largest dt keeping 2 kappa |alpha_z|^2 dt <= cap for every z carrying weight.
    /// Infinite when the occupied support is dark.
    double max_step(double cap) const;

    /// p(z) <- p(z) exp(-2 |alpha_z|^2 kappa dt), renormalized. Any dt > 0 is exact.
    void advance_no_count(double dt);
    /// p(z) <- p(z) |alpha_z|^2, renormalized; records the count at the current t.
    /// Throws NumericalAbort when all weight sits on dark values of z.
    void apply_jump();
    /// One Monte Carlo step: a jump if 2 kappa <a^dag a>_c dt > u, then a no-count
    /// step of dt. Throws std::invalid_argument if the jump probability exceeds 0.05.
    bool advance_mc(double dt, double u);

   private:
    ZDistribution dist_;
    std::shared_ptr<const AmplitudeTable> amplitudes_;
    double kappa_;
    double tau_rate_;
    double t_ = 0.0;
    double log_norm_ = 0.0;
    std::vector<double> jump_times_;
    // exp(-2 kappa |alpha_z|^2 dt) for the last dt used.
    std::vector<double> decay_;
    double decay_dt_ = -1.0;
};

/// Value-semantics wrappers over the TrajectoryState members.
TrajectoryState no_count_step(TrajectoryState state, double dt);
TrajectoryState jump(TrajectoryState state);
std::pair<TrajectoryState, bool> mc_step(TrajectoryState state, double dt, double u);

/// |alpha_z|^{2m} exp(-2 |alpha_z|^2 kappa t) p0(z) / F^2, evaluated directly in log space.
ZDistribution closed_form_distribution(const ZDistribution& p0, const AmplitudeTable& amplitudes, double kappa, int m,
                                       double t);

double conditional_photon_number(const TrajectoryState& state);
/// Conditional photon number in units of |C|^2 (|C'|^2 for transmission).
double conditional_photon_number_reduced(const TrajectoryState& state);
/// Var_z(|alpha_z|^2) / <|alpha_z|^2>. Throws std::domain_error for dark states.
double mandel_q(const TrajectoryState& state);
double mandel_q_reduced(const TrajectoryState& state);
double width(const TrajectoryState& state);

/// Indices of local maxima carrying more than `threshold` probability. A flat
/// top counts once, at its first index.
std::vector<size_t> find_peaks(const ZDistribution& dist, double threshold = 1e-3);
/// Full width at half maximum of the peak at index i, in units of z, by linear
/// interpolation between grid points. A lone grid point has the grid spacing as width.
double fwhm_of_peak(const ZDistribution& dist, size_t peak);
/// Probability not sitting on a local maximum: zero once every peak is a single grid point.
double collapse_residual(const ZDistribution& dist);

enum class WidthRegime { TransversePeak, TransmissionSinglet, TransmissionDoublet };

struct WidthPrediction {
    WidthRegime regime = WidthRegime::TransversePeak;
    /// Peak distance from the origin (transverse) or from z_p (transmission).
    double center_offset = 0.0;
    double fwhm = 0.0;
    /// False when the narrow-peak assumption behind the formula does not hold
    /// (fwhm above a third of the relevant scale).
    bool guard_satisfied = false;
};

/// Analytic peak width after m counts at dimensionless time tau.
WidthPrediction predicted_width(Scenario scenario, int m, double tau, double kappa_over_u11 = 1.0);

/// Delta z = (kappa/U11) sqrt(tau'/m - 1); infinite for m = 0 and NaN for m > tau'.
double doublet_splitting(int m, double tau, double kappa_over_u11);

enum class OutcomeKind { Singlet, Doublet };

std::string_view to_string(OutcomeKind kind);

struct OutcomeReport {
    OutcomeKind kind = OutcomeKind::Singlet;
    int z1 = 0;
    /// Equal to z1 for a singlet.
    int z2 = 0;
    double delta_z = 0.0;
    /// Cross-check from (m, tau): the splitting for transmission, sqrt(m/tau) otherwise.
    double delta_z_predicted = 0.0;
    double phase_phi = 0.0;
    double phase_big_phi = 0.0;
    std::pair<double, double> component_weights{1.0, 0.0};
};

/// Classifies the final distribution. Throws ClassificationError for shapes
/// that are neither a singlet nor a doublet.
OutcomeReport classify_outcome(const TrajectoryState& state, const ProbeModel& model);

struct StepPolicy {
    /// Upper bound for the per-step jump probability; at most 0.05.
    double max_jump_probability = 0.05;
};

struct StopCondition {
    double max_tau = 0.0;
    /// Collapse is only tested after this time.
    double min_tau = 0.0;
    /// Stop once collapse_residual falls below this value; <= 0 disables.
    double residual_mass = 1e-9;
};

struct Schedule {
    /// Sample spacing in tau; <= 0 records only the endpoints.
    double sample_interval_tau = 0.0;
    std::vector<double> snapshot_taus;
};

struct TrajectorySetup {
    ProbeModel model;
    ZDistribution initial;
    StepPolicy step;
    StopCondition stop;
    Schedule schedule;
};

struct Sample {
    double t = 0.0;
    double tau = 0.0;
    int m = 0;
    double mean_z = 0.0;
    double width = 0.0;
    double cond_photons_reduced = 0.0;
    /// NaN when the state is dark.
    double mandel_q_reduced = 0.0;
};

struct Snapshot {
    double t = 0.0;
    double tau = 0.0;
    int m = 0;
    ZDistribution dist;
};

struct RunRecord {
    std::vector<Sample> samples;
    std::vector<Snapshot> snapshots;
    std::optional<OutcomeReport> outcome;
    std::optional<std::string> classification_error;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    bool collapsed = false;
    std::uint64_t steps = 0;
    TrajectoryState final_state;
};

/// Independent generator for trajectory `stream` of an ensemble seeded with `seed`.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);
/// Uniform double in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng);

using StepObserver = std::function<void(const TrajectoryState&, bool jumped)>;

/// Runs one trajectory until max_tau or collapse. Deterministic in (seed, stream).
RunRecord run_trajectory(const TrajectorySetup& setup, std::uint64_t seed, std::uint64_t stream = 0,
                         const StepObserver& observer = {});

/// Trajectories 0..n-1 spread over `threads` workers (0 = hardware concurrency).
/// Results are ordered by stream index and independent of the worker count.
std::vector<RunRecord> run_ensemble(const TrajectorySetup& setup, std::uint64_t seed, int n_traj, int threads = 0);

}  // namespace backaction
