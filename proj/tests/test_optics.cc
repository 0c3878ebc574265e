#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "backaction/optics.h"

using namespace backaction;

namespace {

ProbeModel transmission(double kappa_over_u11 = 1.0, double z_p = 50.0, double c = 1.0) {
    return ProbeModel::transmission(1.0, kappa_over_u11, z_p, c);
}

}  // namespace

TEST(SteadyAmplitude, MaximumDarkAtZero) {
    auto model = ProbeModel::transverse(Scenario::DiffractionMaximum, 1.0, 0.3);
    EXPECT_EQ(std::abs(steady_amplitude(model, 0)), 0.0);
}

TEST(SteadyAmplitude, TransverseLinearAndOdd) {
    auto model = ProbeModel::transverse(Scenario::DiffractionMinimum, 2.0, 0.3);
    auto c = amplitude_scale(model);
    EXPECT_NEAR(std::abs(c), 0.3, 1e-15);
    for (int z = -20; z <= 20; ++z) {
        auto a = steady_amplitude(model, z);
        EXPECT_NEAR(std::abs(a - c * static_cast<double>(z)), 0.0, 1e-14);
        EXPECT_NEAR(std::abs(a + steady_amplitude(model, -z)), 0.0, 1e-14);
    }
}

TEST(SteadyAmplitude, TransmissionResonance) {
    auto model = transmission(1.0, 50.0, 0.7);
    auto a = steady_amplitude(model, 50);
    EXPECT_NEAR(a.real(), 0.7, 1e-15);
    EXPECT_NEAR(a.imag(), 0.0, 1e-15);
    EXPECT_NEAR(resonance_center(model), 50.0, 1e-12);
}

TEST(SteadyAmplitude, TransmissionOneLinewidthOff) {
    auto model = transmission(1.0, 50.0, 1.0);
    auto a = steady_amplitude(model, 51);
    auto expected = 1.0 / std::complex<double>(1.0, 1.0);
    EXPECT_NEAR(std::abs(a - expected), 0.0, 1e-15);
    EXPECT_NEAR(std::norm(a), 0.5, 1e-15);
}

TEST(SteadyAmplitude, LorentzianSymmetry) {
    auto model = transmission(2.5, 40.0, 0.9);
    for (int s = 0; s <= 40; ++s) {
        auto up = steady_amplitude(model, 40 + s);
        auto down = steady_amplitude(model, 40 - s);
        EXPECT_NEAR(std::abs(up), std::abs(down), 1e-15);
        EXPECT_NEAR(std::arg(up), -std::arg(down), 1e-14);
    }
}

TEST(SteadyAmplitude, TransmissionRequiresDispersiveCoupling) {
    auto model = transmission();
    model.u11 = 0.0;
    EXPECT_THROW(model.validate(), std::invalid_argument);
    EXPECT_THROW(steady_amplitude(model, 1), std::invalid_argument);
}

TEST(TransientAmplitude, StartsAtInitialValue) {
    auto model = transmission();
    model.alpha0 = {0.3, -0.2};
    auto a = transient_amplitude(model, 47, 0.0);
    EXPECT_NEAR(std::abs(a - model.alpha0), 0.0, 1e-15);
}

TEST(TransientAmplitude, RelaxesToSteadyState) {
    auto model = transmission();
    model.alpha0 = {0.5, 0.5};
    for (int z : {40, 50, 53}) {
        auto steady = steady_amplitude(model, z);
        EXPECT_LT(std::abs(transient_amplitude(model, z, 20.0) - steady), 1e-8 * std::abs(model.alpha0));
        EXPECT_LT(std::abs(transient_amplitude(model, z, 30.0) - steady), 1e-9 * std::abs(steady));
    }
}

TEST(TransientAmplitude, HalfwayAtLnTwoOnResonance) {
    auto model = transmission(1.0, 50.0, 0.8);
    auto a = transient_amplitude(model, 50, std::log(2.0));
    EXPECT_NEAR(a.real(), 0.4, 1e-14);
    EXPECT_NEAR(a.imag(), 0.0, 1e-14);
}

TEST(TransientAmplitude, MatchesCavityOdeIntegration) {
    // d alpha/dt = source - (i (shift - delta_p) + kappa) alpha, integrated by RK4.
    auto model = transmission(1.0, 50.0, 0.8);
    int z = 52;
    std::complex<double> source = model.eta;
    std::complex<double> rate(model.kappa, model.u11 * z - model.delta_p);
    auto f = [&](std::complex<double> a) { return source - rate * a; };
    std::complex<double> a = 0.0;
    double h = 1e-3;
    for (int i = 0; i < 1500; ++i) {
        auto k1 = f(a);
        auto k2 = f(a + 0.5 * h * k1);
        auto k3 = f(a + 0.5 * h * k2);
        auto k4 = f(a + h * k3);
        a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    EXPECT_NEAR(std::abs(a - transient_amplitude(model, z, 1.5)), 0.0, 1e-12);
}

TEST(PrefactorExponent, DarkStateIsZero) {
    auto model = ProbeModel::transverse(Scenario::DiffractionMaximum, 1.0, 0.3);
    auto phi = prefactor_exponent(model, 0, 12.0);
    EXPECT_EQ(phi.real(), 0.0);
    EXPECT_EQ(phi.imag(), 0.0);
}

TEST(PrefactorExponent, ResonantPhaseVanishes) {
    auto model = transmission(1.0, 50.0, 0.6);
    auto phi = prefactor_exponent(model, 50, 7.0);
    EXPECT_NEAR(phi.imag(), 0.0, 1e-15);
    EXPECT_NEAR(phi.real(), -0.36 * 7.0, 1e-13);
}

TEST(PrefactorExponent, DeterministicPhaseOffResonance) {
    auto model = transmission(2.0, 30.0, 0.6);
    double t = 3.5;
    for (int dz : {-4, -1, 2, 5}) {
        auto phi = prefactor_exponent(model, 30 + dz, t);
        double intensity = std::norm(steady_amplitude(model, 30 + dz));
        EXPECT_NEAR(phi.imag(), intensity * model.u11 * dz * t, 1e-13);
        EXPECT_NEAR(phi.real(), -intensity * model.kappa * t, 1e-13);
    }
}

TEST(PrefactorExponent, RealPartNeverPositive) {
    auto tr = transmission(1.3, 20.0, 0.9);
    auto mx = ProbeModel::transverse(Scenario::DiffractionMaximum, 1.0, 0.2);
    for (int z = 0; z <= 40; ++z) {
        EXPECT_LE(prefactor_exponent(tr, z, 4.0).real(), 0.0);
        EXPECT_LE(prefactor_exponent(mx, z, 4.0).real(), 0.0);
        EXPECT_LE(prefactor_exponent_transient(tr, z, 4.0).real(), 0.0);
    }
}

TEST(PrefactorExponent, TransientQuadratureApproachesSteadyRate) {
    auto model = transmission(1.0, 10.0, 0.5);
    for (int z : {8, 10, 13}) {
        auto late = prefactor_exponent_transient(model, z, 40.0);
        auto early = prefactor_exponent_transient(model, z, 30.0);
        auto steady_rate = prefactor_exponent(model, z, 1.0);
        EXPECT_NEAR((late - early).real() / 10.0, steady_rate.real(), 1e-9);
        EXPECT_NEAR((late - early).imag() / 10.0, steady_rate.imag(), 1e-9);
    }
    EXPECT_EQ(std::abs(prefactor_exponent_transient(model, 10, 0.0)), 0.0);
}

TEST(CatPhase, Values) {
    auto model = transmission(1.0);
    EXPECT_EQ(cat_phase(model, 0.0), 0.0);
    EXPECT_NEAR(cat_phase(model, 1.0), -std::numbers::pi / 4, 1e-15);
    auto wide = transmission(4.0);
    EXPECT_NEAR(cat_phase(wide, 4.0), -std::numbers::pi / 4, 1e-15);
    for (double dz = 0.0; dz < 50.0; dz += 0.7) {
        double phi = cat_phase(model, dz);
        EXPECT_LE(phi, 0.0);
        EXPECT_GT(phi, -std::numbers::pi / 2);
    }
}

TEST(CatPhase, PhaseBalanceSplitting) {
    double x = phase_balance_splitting();
    EXPECT_NEAR(x, 2.331122370414423, 1e-12);
    EXPECT_NEAR(2 * std::atan(x), x, 1e-12);
    auto model = transmission(1.0);
    EXPECT_NEAR(cat_phase_drift_rate(model, x), 0.0, 1e-12);
    EXPECT_GT(std::abs(cat_phase_drift_rate(model, 1.0)), 1e-3);
}

TEST(AmplitudeTableTest, TransmissionPeakAtResonance) {
    auto model = transmission(1.0, 12.0, 0.5);
    std::vector<int> grid;
    for (int z = 0; z <= 30; ++z) grid.push_back(z);
    auto table = amplitude_table(model, grid);
    ASSERT_EQ(table.alpha.size(), grid.size());
    size_t best = 0;
    for (size_t i = 0; i < grid.size(); ++i) {
        EXPECT_NEAR(table.intensity[i], std::norm(table.alpha[i]), 1e-15);
        if (table.intensity[i] > table.intensity[best]) best = i;
    }
    EXPECT_EQ(grid[best], 12);
    EXPECT_NEAR(table.z_p, 12.0, 1e-12);
    EXPECT_NEAR(table.reduced_scale(), 0.25, 1e-15);
}

TEST(AmplitudeTableTest, TransverseHasNoResonance) {
    auto model = ProbeModel::transverse(Scenario::DiffractionMaximum, 1.0, 0.1);
    auto table = amplitude_table(model, {0, 1, 2});
    EXPECT_TRUE(std::isnan(table.z_p));
    EXPECT_NEAR(tau_per_time(model), 2 * 0.01, 1e-15);
}
