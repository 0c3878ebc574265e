#include "backaction/oracle.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "backaction/errors.h"
#include "backaction/numerics.h"
#include "backaction/trajectory.h"

namespace backaction {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};
constexpr size_t kMaxCompositions = 10000;
constexpr int kMaxPhotonCutoff = 4000;

void enumerate(int remaining, int site, std::vector<int>& current, std::vector<std::vector<int>>& out) {
    const int last = static_cast<int>(current.size()) - 1;
    if (site == last) {
        current[static_cast<size_t>(site)] = remaining;
        out.push_back(current);
        return;
    }
    for (int q = 0; q <= remaining; ++q) {
        current[static_cast<size_t>(site)] = q;
        enumerate(remaining - q, site + 1, current, out);
    }
}

}  // namespace

std::vector<std::vector<int>> compositions(int n_atoms, int n_sites) {
    if (n_atoms < 0 || n_sites < 1) {
        throw std::invalid_argument("compositions need n_atoms >= 0 and n_sites >= 1");
    }
    double count = std::exp(log_binomial(n_atoms + n_sites - 1, n_sites - 1));
    if (count > kMaxCompositions + 0.5) {
        throw std::invalid_argument("configuration basis exceeds 10^4 states");
    }
    std::vector<std::vector<int>> out;
    std::vector<int> current(static_cast<size_t>(n_sites), 0);
    enumerate(n_atoms, 0, current, out);
    return out;
}

std::vector<std::complex<double>> superfluid_coefficients(const std::vector<std::vector<int>>& configs, int n_sites) {
    std::vector<std::complex<double>> out;
    out.reserve(configs.size());
    for (const auto& q : configs) {
        int n = 0;
        double log_c2 = 0.0;
        for (int qj : q) {
            n += qj;
            log_c2 -= log_factorial(qj);
        }
        log_c2 += log_factorial(n) - n * std::log(static_cast<double>(n_sites));
        out.emplace_back(std::exp(0.5 * log_c2), 0.0);
    }
    return out;
}

JointState::JointState(std::vector<std::vector<int>> configs, Eigen::MatrixXcd amplitudes)
    : configs_(std::move(configs)), psi_(std::move(amplitudes)) {
    if (static_cast<size_t>(psi_.rows()) != configs_.size()) {
        throw std::invalid_argument("amplitude rows must match the configuration basis");
    }
    if (psi_.cols() < 2) {
        throw std::invalid_argument("photon cutoff must be at least 1");
    }
}

JointState JointState::product_vacuum(std::vector<std::vector<int>> configs,
                                      const std::vector<std::complex<double>>& coefficients, int photon_cutoff) {
    if (coefficients.size() != configs.size()) {
        throw std::invalid_argument("one coefficient per configuration is required");
    }
    Eigen::MatrixXcd psi = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(configs.size()), photon_cutoff + 1);
    for (size_t q = 0; q < configs.size(); ++q) {
        psi(static_cast<Eigen::Index>(q), 0) = coefficients[q];
    }
    JointState state(std::move(configs), std::move(psi));
    state.renormalize();
    state.log_norm_ = 0.0;
    return state;
}

double JointState::tail_mass() const {
    double total = psi_.squaredNorm();
    if (!(total > 0.0)) {
        return 0.0;
    }
    return psi_.rightCols(2).squaredNorm() / total;
}

double JointState::branch_weight(size_t q) const { return psi_.row(static_cast<Eigen::Index>(q)).squaredNorm(); }

double JointState::coherent_fidelity(size_t q, std::complex<double> beta) const {
    auto row = psi_.row(static_cast<Eigen::Index>(q));
    double weight = row.squaredNorm();
    if (!(weight > 0.0)) {
        return 0.0;
    }
    std::complex<double> overlap = 0.0;
    std::complex<double> coeff = std::exp(-0.5 * std::norm(beta));
    for (Eigen::Index n = 0; n < row.size(); ++n) {
        if (n > 0) {
            coeff *= beta / std::sqrt(static_cast<double>(n));
        }
        overlap += std::conj(coeff) * row(n);
    }
    return std::norm(overlap) / weight;
}

void JointState::enlarge_cutoff(int photon_cutoff) {
    if (photon_cutoff <= this->photon_cutoff()) {
        return;
    }
    Eigen::MatrixXcd grown = Eigen::MatrixXcd::Zero(psi_.rows(), photon_cutoff + 1);
    grown.leftCols(psi_.cols()) = psi_;
    psi_ = std::move(grown);
}

void JointState::renormalize() {
    double norm2 = psi_.squaredNorm();
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
        throw NumericalAbort("joint state has zero or non-finite norm");
    }
    psi_ /= std::sqrt(norm2);
    log_norm_ += std::log(norm2);
}

namespace {

struct ConfigCoefficients {
    std::vector<double> detuning;                // U11 D11 - Delta_p
    std::vector<std::complex<double>> creation;  // U10 D10 a0 + i eta
};

ConfigCoefficients config_coefficients(const std::vector<std::vector<int>>& configs, const ProbeModel& model,
                                       const LatticeSpec& lattice) {
    auto modes = measured_modes(model.scenario, lattice.period);
    ConfigCoefficients c;
    for (const auto& q : configs) {
        std::complex<double> d = coupling_coefficient(q, modes.left, modes.right, lattice);
        double shift = model.scenario == Scenario::Transmission ? model.u11 * d.real() : 0.0;
        c.detuning.push_back(shift - model.delta_p);
        std::complex<double> scatter = model.scenario == Scenario::Transmission ? 0.0 : model.u10 * d * model.a0;
        c.creation.push_back(scatter + kI * model.eta);
    }
    return c;
}

Eigen::MatrixXcd derivative(const Eigen::MatrixXcd& psi, const ConfigCoefficients& c, double kappa,
                            const std::vector<double>& sqrt_n) {
    const Eigen::Index rows = psi.rows();
    const Eigen::Index cols = psi.cols();
    Eigen::MatrixXcd out(rows, cols);
    for (Eigen::Index q = 0; q < rows; ++q) {
        const std::complex<double> diag = c.detuning[static_cast<size_t>(q)] - kI * kappa;
        const std::complex<double> g = c.creation[static_cast<size_t>(q)];
        const std::complex<double> g_conj = std::conj(g);
        for (Eigen::Index n = 0; n < cols; ++n) {
            std::complex<double> h = diag * static_cast<double>(n) * psi(q, n);
            if (n + 1 < cols) {
                h += g_conj * sqrt_n[static_cast<size_t>(n + 1)] * psi(q, n + 1);
            }
            if (n > 0) {
                h += g * sqrt_n[static_cast<size_t>(n)] * psi(q, n - 1);
            }
            out(q, n) = -kI * h;
        }
    }
    return out;
}

Eigen::MatrixXcd rk4(const Eigen::MatrixXcd& psi, double h,
                     const std::function<Eigen::MatrixXcd(const Eigen::MatrixXcd&)>& f) {
    Eigen::MatrixXcd k1 = f(psi);
    Eigen::MatrixXcd k2 = f(psi + 0.5 * h * k1);
    Eigen::MatrixXcd k3 = f(psi + 0.5 * h * k2);
    Eigen::MatrixXcd k4 = f(psi + h * k3);
    return psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// One attempt at the full duration; false when the cutoff proved too small.
bool integrate(JointState& state, const ConfigCoefficients& c, double kappa, double duration,
               const OracleSettings& settings) {
    std::vector<double> sqrt_n(static_cast<size_t>(state.photon_cutoff()) + 1);
    for (size_t n = 0; n < sqrt_n.size(); ++n) {
        sqrt_n[n] = std::sqrt(static_cast<double>(n));
    }
    auto f = [&](const Eigen::MatrixXcd& psi) { return derivative(psi, c, kappa, sqrt_n); };
    double t = 0.0;
    double h = settings.initial_step;
    while (duration - t > 1e-14 * std::max(1.0, duration)) {
        h = std::min(h, duration - t);
        const Eigen::MatrixXcd& psi = state.amplitudes();
        Eigen::MatrixXcd full = rk4(psi, h, f);
        Eigen::MatrixXcd half = rk4(rk4(psi, 0.5 * h, f), 0.5 * h, f);
        double err = (half - full).cwiseAbs().maxCoeff() / 15.0;
        if (err <= settings.tolerance) {
            state.mutable_amplitudes() = half + (half - full) / 15.0;
            state.renormalize();
            t += h;
            if (state.tail_mass() > settings.tail_bound) {
                return false;
            }
        }
        double factor = err > 0.0 ? 0.9 * std::pow(settings.tolerance / err, 0.2) : 2.0;
        h *= std::clamp(factor, 0.2, 2.0);
    }
    return true;
}

}  // namespace

void evolve_nonhermitian(JointState& state, const ProbeModel& model, const LatticeSpec& lattice, double duration,
                         const OracleSettings& settings) {
    if (duration < 0.0) {
        throw std::invalid_argument("evolution time must be nonnegative");
    }
    if (duration == 0.0) {
        return;
    }
    model.validate();
    auto coefficients = config_coefficients(state.configs(), model, lattice);
    JointState start = state;
    while (true) {
        JointState trial = start;
        if (integrate(trial, coefficients, model.kappa, duration, settings)) {
            state = std::move(trial);
            return;
        }
        int grown = start.photon_cutoff() + start.photon_cutoff() / 2 + 8;
        if (grown > kMaxPhotonCutoff) {
            throw NumericalAbort("photon cutoff exceeded " + std::to_string(kMaxPhotonCutoff));
        }
        start.enlarge_cutoff(grown);
    }
}

void apply_jump(JointState& state) {
    Eigen::MatrixXcd& psi = state.mutable_amplitudes();
    const Eigen::Index cols = psi.cols();
    for (Eigen::Index n = 0; n + 1 < cols; ++n) {
        psi.col(n) = std::sqrt(static_cast<double>(n + 1)) * psi.col(n + 1);
    }
    psi.col(cols - 1).setZero();
    if (!(psi.squaredNorm() > 0.0)) {
        throw NumericalAbort("photocount applied to the photon vacuum");
    }
    state.renormalize();
}

ZDistribution z_marginal(const JointState& state, const ScenarioGeometry& geometry, const LatticeSpec& lattice) {
    std::vector<double> w(geometry.z_grid.size(), 0.0);
    for (size_t q = 0; q < state.configs().size(); ++q) {
        int z = statistical_variable(state.configs()[q], geometry.scenario, lattice);
        auto it = std::lower_bound(geometry.z_grid.begin(), geometry.z_grid.end(), z);
        if (it == geometry.z_grid.end() || *it != z) {
            throw std::logic_error("configuration value of z lies outside the scenario grid");
        }
        w[static_cast<size_t>(it - geometry.z_grid.begin())] += state.branch_weight(q);
    }
    return ZDistribution::from_weights(geometry.z_grid, std::move(w), geometry.meaning);
}

EquivalenceResult check_equivalence(const ProbeModel& model_in, const LatticeSpec& lattice, const OracleScript& script,
                                    const OracleSettings& settings) {
    lattice.validate();
    ProbeModel model = model_in;
    model.alpha0 = 0.0;
    model.validate();
    if (!(script.settle_time > 0.0)) {
        throw std::invalid_argument("settle time must be positive");
    }
    double previous = script.settle_time;
    for (double tj : script.jump_times) {
        if (tj < previous) {
            throw std::invalid_argument("jump times must be nondecreasing and not before the settle time");
        }
        previous = tj;
    }
    if (script.final_time < previous) {
        throw std::invalid_argument("final time precedes the last jump");
    }

    auto geometry = scenario_geometry(model.scenario, lattice);
    ZDistribution p0 = model.scenario == Scenario::DiffractionMinimum ? superfluid_difference(lattice)
                                                                       : superfluid_atom_number(lattice);

    // Reduced model: p0 weighted by the transient prefactor up to the settle time.
    std::vector<double> settled(p0.size());
    for (size_t i = 0; i < p0.size(); ++i) {
        settled[i] = p0.p(i) * std::exp(2.0 * prefactor_exponent_transient(model, p0.z(i), script.settle_time).real());
    }
    auto table = std::make_shared<const AmplitudeTable>(amplitude_table(model, p0.z_values()));
    TrajectoryState reduced(ZDistribution::from_weights(p0.z_values(), std::move(settled), p0.meaning()), table,
                            model.kappa);

    double brightest = *std::max_element(table->intensity.begin(), table->intensity.end());
    int cutoff = static_cast<int>(std::ceil(brightest + 10.0 * std::sqrt(brightest) + 20.0));
    auto configs = compositions(lattice.n_atoms, lattice.n_sites);
    auto coefficients = superfluid_coefficients(configs, lattice.n_sites);
    JointState joint = JointState::product_vacuum(configs, coefficients, cutoff);
    evolve_nonhermitian(joint, model, lattice, script.settle_time, settings);

    double now = script.settle_time;
    for (double tj : script.jump_times) {
        if (tj > now) {
            evolve_nonhermitian(joint, model, lattice, tj - now, settings);
            reduced.advance_no_count(tj - now);
            now = tj;
        }
        apply_jump(joint);
        reduced.apply_jump();
    }
    if (script.final_time > now) {
        evolve_nonhermitian(joint, model, lattice, script.final_time - now, settings);
        reduced.advance_no_count(script.final_time - now);
    }

    ZDistribution oracle = z_marginal(joint, geometry, lattice);
    double diff = 0.0;
    for (size_t i = 0; i < oracle.size(); ++i) {
        diff = std::max(diff, std::abs(oracle.p(i) - reduced.dist().probability_at(oracle.z(i))));
    }
    return {oracle, reduced.dist(), diff, joint.photon_cutoff()};
}

}  // namespace backaction
