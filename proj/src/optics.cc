#include "backaction/optics.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

namespace backaction {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

// Numerator of the Lorentzian amplitude: drive minus transverse scattering.
std::complex<double> source_term(const ProbeModel& model, int z) {
    return model.eta - kI * model.u10 * model.a0 * static_cast<double>(z);
}

}  // namespace

void ProbeModel::validate() const {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
        throw std::invalid_argument("cavity decay rate kappa must be positive");
    }
    if (scenario == Scenario::Transmission) {
        if (a0 != 0.0) {
            throw std::invalid_argument("transmission measurement requires a0 = 0");
        }
        if (u11 == 0.0) {
            throw std::invalid_argument("transmission measurement requires U11 != 0");
        }
        if (eta == 0.0) {
            throw std::invalid_argument("transmission measurement requires a nonzero mirror drive eta");
        }
    } else {
        if (eta != 0.0) {
            throw std::invalid_argument("transverse probing requires eta = 0");
        }
        if (u10 == 0.0 || a0 == 0.0) {
            throw std::invalid_argument("transverse probing requires nonzero U10 and a0");
        }
    }
}

ProbeModel ProbeModel::transmission(double kappa, double kappa_over_u11, double z_p, double resonant_amplitude) {
    if (!(kappa_over_u11 != 0.0) || !std::isfinite(kappa_over_u11)) {
        throw std::invalid_argument("kappa/U11 must be finite and nonzero");
    }
    ProbeModel model;
    model.scenario = Scenario::Transmission;
    model.kappa = kappa;
    model.u11 = kappa / kappa_over_u11;
    model.delta_p = z_p * model.u11;
    model.eta = resonant_amplitude * kappa;
    model.validate();
    return model;
}

ProbeModel ProbeModel::transverse(Scenario scenario, double kappa, double coupling_scale) {
    if (scenario == Scenario::Transmission) {
        throw std::invalid_argument("transverse model requested for the transmission scenario");
    }
    ProbeModel model;
    model.scenario = scenario;
    model.kappa = kappa;
    model.a0 = 1.0;
    model.u10 = coupling_scale * kappa;
    model.validate();
    return model;
}

double dispersive_shift(const ProbeModel& model, int z) {
    return model.scenario == Scenario::Transmission ? model.u11 * z : 0.0;
}

std::complex<double> amplitude_scale(const ProbeModel& model) {
    if (model.scenario == Scenario::Transmission) {
        return model.eta / model.kappa;
    }
    return kI * model.u10 * model.a0 / (kI * model.delta_p - model.kappa);
}

double resonance_center(const ProbeModel& model) {
    if (model.scenario != Scenario::Transmission) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return model.delta_p / model.u11;
}

double tau_per_time(const ProbeModel& model) { return 2.0 * std::norm(amplitude_scale(model)) * model.kappa; }

std::complex<double> steady_amplitude(const ProbeModel& model, int z) {
    if (model.scenario == Scenario::Transmission && model.u11 == 0.0) {
        throw std::invalid_argument("transmission amplitude undefined for U11 = 0");
    }
    return source_term(model, z) / (kI * (dispersive_shift(model, z) - model.delta_p) + model.kappa);
}

std::complex<double> transient_amplitude(const ProbeModel& model, int z, double t) {
    if (t < 0.0) {
        throw std::invalid_argument("time must be nonnegative");
    }
    auto steady = steady_amplitude(model, z);
    auto decay = std::exp((-kI * (dispersive_shift(model, z) - model.delta_p) - model.kappa) * t);
    return steady + (model.alpha0 - steady) * decay;
}

std::complex<double> prefactor_exponent(const ProbeModel& model, int z, double t) {
    auto alpha = steady_amplitude(model, z);
    double damping = -std::norm(alpha) * model.kappa * t;
    double phase = std::imag(source_term(model, z) * std::conj(alpha)) * t;
    return {damping, phase};
}

std::complex<double> prefactor_exponent_transient(const ProbeModel& model, int z, double t) {
    if (t < 0.0) {
        throw std::invalid_argument("time must be nonnegative");
    }
    if (t == 0.0) {
        return 0.0;
    }
    auto source = source_term(model, z);
    auto damping = [&](double s) { return -model.kappa * std::norm(transient_amplitude(model, z, s)); };
    auto phase = [&](double s) { return std::imag(source * std::conj(transient_amplitude(model, z, s))); };

    using Quadrature = boost::math::quadrature::gauss_kronrod<double, 31>;
    // Panels no wider than 1/kappa resolve the transient; the tail is smooth.
    const double panel = 1.0 / model.kappa;
    const auto panels = static_cast<std::int64_t>(std::ceil(t / panel));
    double re = 0.0;
    double im = 0.0;
    for (std::int64_t k = 0; k < panels; ++k) {
        double a = static_cast<double>(k) * panel;
        double b = std::min(t, a + panel);
        re += Quadrature::integrate(damping, a, b, 15, 1e-14);
        im += Quadrature::integrate(phase, a, b, 15, 1e-14);
    }
    return {re, im};
}

double cat_phase(const ProbeModel& model, double delta_z) { return -std::atan(model.u11 * delta_z / model.kappa); }

double cat_phase_drift_rate(const ProbeModel& model, double delta_z) {
    double x = model.u11 * delta_z / model.kappa;
    double intensity = std::norm(amplitude_scale(model)) / (1.0 + x * x);
    return 2.0 * model.kappa * intensity * cat_phase(model, delta_z) + intensity * model.u11 * delta_z;
}

double phase_balance_splitting() {
    auto f = [](double x) { return x - 2.0 * std::atan(x); };
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iterations = 200;
    auto [lo, hi] = boost::math::tools::toms748_solve(f, 1.0, 10.0, tol, iterations);
    return 0.5 * (lo + hi);
}

AmplitudeTable amplitude_table(const ProbeModel& model, const std::vector<int>& z_values) {
    model.validate();
    AmplitudeTable table;
    table.z_values = z_values;
    table.alpha.reserve(z_values.size());
    table.intensity.reserve(z_values.size());
    for (int z : z_values) {
        auto a = steady_amplitude(model, z);
        table.alpha.push_back(a);
        table.intensity.push_back(std::norm(a));
    }
    table.c_constant = amplitude_scale(model);
    table.z_p = resonance_center(model);
    return table;
}

}  // namespace backaction
