#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "backaction/errors.h"
#include "backaction/trajectory.h"

using namespace backaction;

namespace {

LatticeSpec lattice(int n, int m, int k) { return LatticeSpec{n, m, k, 1.0, {}}; }

TrajectoryState make_state(const ZDistribution& dist, const ProbeModel& model) {
    auto table = std::make_shared<const AmplitudeTable>(amplitude_table(model, dist.z_values()));
    return TrajectoryState(dist, table, model.kappa);
}

TrajectoryState custom_state(std::vector<int> z, std::vector<double> p, std::vector<double> intensity) {
    AmplitudeTable table;
    table.z_values = z;
    for (double i : intensity) {
        table.alpha.emplace_back(std::sqrt(i), 0.0);
        table.intensity.push_back(i);
    }
    table.c_constant = 1.0;
    table.z_p = std::numeric_limits<double>::quiet_NaN();
    ZDistribution dist(std::move(z), std::move(p), ZMeaning::AtomNumberAtKSites);
    return TrajectoryState(dist, std::make_shared<const AmplitudeTable>(table), 1.0);
}

ZDistribution point_mass(const std::vector<int>& grid, int z) {
    std::vector<double> p(grid.size(), 0.0);
    for (size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] == z) p[i] = 1.0;
    }
    return ZDistribution(grid, p, ZMeaning::AtomNumberAtKSites);
}

std::vector<int> range(int lo, int hi) {
    std::vector<int> z(hi - lo + 1);
    std::iota(z.begin(), z.end(), lo);
    return z;
}

double total(const ZDistribution& d) {
    auto p = d.probabilities();
    return std::accumulate(p.begin(), p.end(), 0.0);
}

ProbeModel transmission(double z_p, double c = 1.0, double r = 1.0) {
    return ProbeModel::transmission(1.0, r, z_p, c);
}

}  // namespace

TEST(NoCountStep, UniformIntensityLeavesDistributionUnchanged) {
    auto model = transmission(5.0);
    ZDistribution d({4, 6}, {0.3, 0.7}, ZMeaning::AtomNumberAtKSites);
    auto s = no_count_step(make_state(d, model), 3.0);
    EXPECT_NEAR(s.dist().p(0), 0.3, 1e-15);
    EXPECT_NEAR(s.dist().p(1), 0.7, 1e-15);
    EXPECT_EQ(s.m(), 0);
    EXPECT_DOUBLE_EQ(s.t(), 3.0);
}

TEST(NoCountStep, MaximumFavorsDarkState) {
    auto model = ProbeModel::transverse(Scenario::DiffractionMaximum, 1.0, 0.1);
    auto s = make_state(superfluid_atom_number(lattice(20, 2, 1)), model);
    double last = s.dist().probability_at(0);
    for (int i = 0; i < 500; ++i) {
        s.advance_no_count(0.5);
        double now = s.dist().probability_at(0);
        EXPECT_GE(now, last);
        last = now;
    }
    EXPECT_GT(last, 0.5);
}

TEST(NoCountStep, TransmissionCenterSuppressedWithoutCounts) {
    auto model = transmission(50.0);
    auto p0 = superfluid_atom_number(lattice(100, 100, 50));
    auto s = make_state(p0, model);
    s.advance_no_count(0.7 / s.tau_rate());
    EXPECT_NEAR(s.tau(), 0.7, 1e-12);
    EXPECT_LT(s.dist().probability_at(50) / p0.probability_at(50), 1.0);
    EXPECT_GT(s.dist().probability_at(56) / p0.probability_at(56), 1.0);
}

TEST(Jump, PointMassUnchanged) {
    auto model = transmission(50.0);
    auto s = jump(make_state(point_mass(range(40, 60), 47), model));
    EXPECT_DOUBLE_EQ(s.dist().probability_at(47), 1.0);
    EXPECT_EQ(s.m(), 1);
    ASSERT_EQ(s.jump_times().size(), 1u);
}

TEST(Jump, TwoPointHandRenormalization) {
    auto s = jump(custom_state({0, 1}, {0.5, 0.5}, {1.0, 3.0}));
    EXPECT_NEAR(s.dist().p(0), 0.25, 1e-15);
    EXPECT_NEAR(s.dist().p(1), 0.75, 1e-15);
}

TEST(Jump, PullsWeightTowardResonance) {
    auto model = transmission(50.0);
    auto p0 = superfluid_atom_number(lattice(100, 100, 50));
    auto s = jump(make_state(p0, model));
    EXPECT_GT(s.dist().probability_at(50), p0.probability_at(50));
    EXPECT_LT(s.dist().probability_at(60), p0.probability_at(60));
}

TEST(Jump, DarkSupportAborts) {
    auto model = ProbeModel::transverse(Scenario::DiffractionMaximum, 1.0, 0.1);
    auto s = make_state(point_mass(range(0, 5), 0), model);
    EXPECT_THROW(s.apply_jump(), NumericalAbort);
}

TEST(McStep, NoJumpForTinyRate) {
    auto s = custom_state({0, 1}, {0.5, 0.5}, {1e-6, 1e-6});
    auto [next, jumped] = mc_step(s, 0.01, std::nextafter(1.0, 0.0));
    EXPECT_FALSE(jumped);
    EXPECT_EQ(next.m(), 0);
}

TEST(McStep, DarkStateNeverJumps) {
    auto s = custom_state({0}, {1.0}, {0.0});
    for (int i = 0; i < 100; ++i) {
        EXPECT_FALSE(s.advance_mc(1.0, 0.0));
    }
    EXPECT_TRUE(std::isinf(s.max_step(0.05)));
}

TEST(McStep, RejectsOversizedSteps) {
    auto s = custom_state({0}, {1.0}, {1.0});
    EXPECT_THROW(s.advance_mc(0.1, 0.5), std::invalid_argument);
    EXPECT_NO_THROW(s.advance_mc(s.max_step(0.05), 0.5));
}

TEST(McStep, EmpiricalJumpFrequency) {
    auto s = custom_state({3}, {1.0}, {2.0});
    double dt = 0.01;
    double prob = s.jump_probability(dt);
    EXPECT_NEAR(prob, 0.04, 1e-15);
    std::mt19937_64 rng(42);
    int jumps = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        auto [next, jumped] = mc_step(s, dt, uniform01(rng));
        jumps += jumped;
    }
    double sigma = std::sqrt(n * prob * (1 - prob));
    EXPECT_LT(std::abs(jumps - n * prob), 3 * sigma);
}

TEST(Observables, MaximumSingletPhotonNumber) {
    auto model = ProbeModel::transverse(Scenario::DiffractionMaximum, 1.0, 0.2);
    auto s = make_state(point_mass(range(0, 30), 17), model);
    EXPECT_NEAR(conditional_photon_number(s), 0.04 * 17 * 17, 1e-12);
    EXPECT_NEAR(conditional_photon_number_reduced(s), 289.0, 1e-10);
    EXPECT_NEAR(mandel_q(s), 0.0, 1e-15);
    EXPECT_EQ(width(s), 0.0);
}

TEST(Observables, TransmissionResonantAndDoublet) {
    auto model = transmission(50.0, 0.5, 2.0);
    auto on = make_state(point_mass(range(40, 60), 50), model);
    EXPECT_NEAR(conditional_photon_number_reduced(on), 1.0, 1e-14);
    std::vector<double> p(21, 0.0);
    p[50 - 40 - 3] = 0.5;
    p[50 - 40 + 3] = 0.5;
    auto d = make_state(ZDistribution(range(40, 60), p, ZMeaning::AtomNumberAtKSites), model);
    double eta = std::abs(model.eta);
    double expected = eta * eta / (model.u11 * model.u11 * 9.0 + model.kappa * model.kappa);
    EXPECT_NEAR(conditional_photon_number(d), expected, 1e-14);
    EXPECT_NEAR(width(d), 3.0, 1e-12);
    EXPECT_NEAR(mandel_q(d), 0.0, 1e-15);
}

TEST(Observables, MandelTwoPoint) {
    auto s = custom_state({0, 1}, {0.5, 0.5}, {0.0, 2.0});
    EXPECT_NEAR(mandel_q(s), 1.0, 1e-15);
    auto dark = custom_state({0}, {1.0}, {0.0});
    EXPECT_THROW(mandel_q(dark), std::domain_error);
}

TEST(Observables, MandelNonnegativeAndSuperfluidWidth) {
    auto model = transmission(50.0);
    auto s = make_state(superfluid_atom_number(lattice(100, 100, 50)), model);
    EXPECT_NEAR(width(s), 5.0, 1e-10);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        s.advance_mc(s.max_step(0.05), uniform01(rng));
        EXPECT_GE(mandel_q(s), -1e-15);
    }
}

TEST(Peaks, PlateauCountsOnce) {
    ZDistribution d(range(0, 6), {0.0, 0.2, 0.3, 0.3, 0.2, 0.0, 0.0}, ZMeaning::AtomNumberAtKSites);
    auto peaks = find_peaks(d);
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_EQ(peaks[0], 2u);
}

TEST(Peaks, ThresholdAndEqualHeightDoublet) {
    ZDistribution d(range(0, 6), {0.4995, 0.0, 0.0005, 0.0, 0.0, 0.0, 0.5}, ZMeaning::AtomNumberAtKSites);
    auto peaks = find_peaks(d);
    ASSERT_EQ(peaks.size(), 2u);
    EXPECT_EQ(d.z(peaks[0]), 0);
    EXPECT_EQ(d.z(peaks[1]), 6);
    EXPECT_NEAR(collapse_residual(d), 0.0, 1e-15);
}

TEST(Peaks, FwhmByInterpolation) {
    ZDistribution lone(range(0, 4), {0, 0, 1, 0, 0}, ZMeaning::AtomNumberAtKSites);
    EXPECT_NEAR(fwhm_of_peak(lone, 2), 1.0, 1e-15);
    ZDistribution tri(range(0, 4), {0, 0.25, 0.5, 0.25, 0}, ZMeaning::AtomNumberAtKSites);
    EXPECT_NEAR(fwhm_of_peak(tri, 2), 2.0, 1e-15);
    EXPECT_NEAR(collapse_residual(tri), 0.5, 1e-15);
    EXPECT_THROW(fwhm_of_peak(tri, 9), std::out_of_range);
}

TEST(PredictedWidth, MaximumCalibrationPoint) {
    auto w = predicted_width(Scenario::DiffractionMaximum, 100, 2 * std::numbers::ln2);
    EXPECT_NEAR(w.fwhm, 1.0, 1e-15);
    EXPECT_NEAR(w.center_offset, std::sqrt(100 / (2 * std::numbers::ln2)), 1e-12);
    EXPECT_TRUE(w.guard_satisfied);
}

TEST(PredictedWidth, TransmissionSinglet) {
    auto w = predicted_width(Scenario::Transmission, 17, 14.6, 1.0);
    EXPECT_EQ(w.regime, WidthRegime::TransmissionSinglet);
    EXPECT_NEAR(w.fwhm, 1.1102113064476344, 1e-12);
    EXPECT_FALSE(w.guard_satisfied);
}

TEST(PredictedWidth, DoubletSplittingAtLongTimes) {
    double dz = doublet_splitting(39, 2006.9, 1.0);
    EXPECT_NEAR(dz, 7.103448061256897, 1e-12);
    EXPECT_LT(std::abs(dz - 7.0), 0.15);
    EXPECT_TRUE(std::isinf(doublet_splitting(0, 5.0, 1.0)));
    EXPECT_TRUE(std::isnan(doublet_splitting(10, 5.0, 1.0)));
    EXPECT_NEAR(doublet_splitting(1, 2.0, -3.0), 3.0, 1e-15);
}

TEST(PredictedWidth, DoubletFormulaAgainstDirectHalfMaximum) {
    // Half-maximum crossings of L^m exp(-tau L), L = 1/(1 + x^2), located on a fine grid.
    auto w = predicted_width(Scenario::Transmission, 20, 2000.0, 1.0);
    EXPECT_EQ(w.regime, WidthRegime::TransmissionDoublet);
    EXPECT_NEAR(w.center_offset, std::sqrt(99.0), 1e-12);
    const double direct = 2.6740959932761363;
    EXPECT_LT(std::abs(w.fwhm - direct) / direct, 0.02);
    EXPECT_TRUE(w.guard_satisfied);
}

TEST(ClosedForm, SimulatedStateMatchesDirectEvaluation) {
    auto model = transmission(20.0, 0.8, 1.5);
    auto p0 = superfluid_atom_number(lattice(40, 2, 1));
    auto s = make_state(p0, model);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 3000; ++i) {
        s.advance_mc(s.max_step(0.05), uniform01(rng));
    }
    ASSERT_GT(s.m(), 5);
    auto closed = closed_form_distribution(p0, s.amplitudes(), model.kappa, s.m(), s.t());
    for (size_t i = 0; i < p0.size(); ++i) {
        EXPECT_NEAR(s.dist().p(i), closed.p(i), 1e-9);
    }
}

TEST(ClosedForm, OrderInvariance) {
    auto model = transmission(20.0, 0.8, 1.5);
    auto p0 = superfluid_atom_number(lattice(40, 2, 1));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> time(0.0, 30.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> times(12);
        for (auto& t : times) t = time(rng);
        std::sort(times.begin(), times.end());
        auto s = make_state(p0, model);
        for (double t : times) {
            if (t > s.t()) s.advance_no_count(t - s.t());
            s.apply_jump();
        }
        s.advance_no_count(30.0 - s.t());
        auto closed = closed_form_distribution(p0, s.amplitudes(), model.kappa, 12, 30.0);
        for (size_t i = 0; i < p0.size(); ++i) {
            EXPECT_NEAR(s.dist().p(i), closed.p(i), 1e-9);
        }
    }
}

TEST(Invariants, NormalizationOverMillionSteps) {
    auto model = transmission(5.0, 0.3);
    auto s = make_state(superfluid_atom_number(lattice(10, 2, 1)), model);
    std::mt19937_64 rng(77);
    double worst = 0.0;
    double dt = 1e-3;
    for (int i = 0; i < 1000000; ++i) {
        s.advance_mc(dt, uniform01(rng));
        if (i % 1000 == 0) worst = std::max(worst, std::abs(total(s.dist()) - 1.0));
    }
    EXPECT_LT(worst, 1e-12);
    EXPECT_LT(std::abs(total(s.dist()) - 1.0), 1e-12);
}

TEST(Invariants, MinimumStaysSymmetric) {
    auto model = ProbeModel::transverse(Scenario::DiffractionMinimum, 1.0, 0.2);
    auto s = make_state(superfluid_difference(lattice(30, 30, 30)), model);
    std::mt19937_64 rng(8);
    for (int i = 0; i < 5000; ++i) {
        s.advance_mc(s.max_step(0.05), uniform01(rng));
    }
    for (int z = 0; z <= 30; z += 2) {
        EXPECT_NEAR(s.dist().probability_at(z), s.dist().probability_at(-z), 1e-12);
    }
}

TEST(Invariants, TransmissionRatioSymmetric) {
    auto model = transmission(15.0, 0.7, 1.2);
    auto p0 = superfluid_atom_number(lattice(30, 2, 1));
    auto s = make_state(p0, model);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 3000; ++i) {
        s.advance_mc(s.max_step(0.05), uniform01(rng));
        if (i % 500 == 0) {
            for (int d = 1; d <= 10; ++d) {
                double up = s.dist().probability_at(15 + d) / p0.probability_at(15 + d);
                double down = s.dist().probability_at(15 - d) / p0.probability_at(15 - d);
                EXPECT_NEAR(up / down, 1.0, 1e-9);
            }
        }
    }
}

TEST(Classification, MaximumSingletAndAmbiguity) {
    auto model = ProbeModel::transverse(Scenario::DiffractionMaximum, 1.0, 0.1);
    auto s = make_state(point_mass(range(0, 20), 12), model);
    s.advance_no_count(2.0);
    s.apply_jump();
    auto out = classify_outcome(s, model);
    EXPECT_EQ(out.kind, OutcomeKind::Singlet);
    EXPECT_EQ(out.z1, 12);

    std::vector<double> p(21, 0.0);
    p[3] = 0.5;
    p[9] = 0.5;
    auto two = make_state(ZDistribution(range(0, 20), p, ZMeaning::AtomNumberAtKSites), model);
    EXPECT_THROW(classify_outcome(two, model), ClassificationError);
}

TEST(Classification, MinimumSignedDoublet) {
    auto model = ProbeModel::transverse(Scenario::DiffractionMinimum, 1.0, 0.1);
    std::vector<int> grid;
    for (int z = -10; z <= 10; z += 2) grid.push_back(z);
    std::vector<double> p(grid.size(), 0.0);
    p[1] = 0.5;
    p[grid.size() - 2] = 0.5;
    auto s = make_state(ZDistribution(grid, p, ZMeaning::OddEvenDifference), model);
    s.advance_no_count(1.0);
    auto out = classify_outcome(s, model);
    EXPECT_EQ(out.kind, OutcomeKind::Doublet);
    EXPECT_EQ(out.z1, 8);
    EXPECT_EQ(out.z2, -8);
    EXPECT_NEAR(out.phase_phi, std::numbers::pi / 2, 1e-15);
    EXPECT_NEAR(out.component_weights.first + out.component_weights.second, 1.0, 1e-15);
}

TEST(Classification, TransmissionSingletNeedsManyCounts) {
    auto model = transmission(10.0);
    auto s = make_state(point_mass(range(0, 20), 10), model);
    for (int i = 0; i < 5; ++i) s.apply_jump();
    s.advance_no_count(4.0 / s.tau_rate());
    auto out = classify_outcome(s, model);
    EXPECT_EQ(out.kind, OutcomeKind::Singlet);
    EXPECT_EQ(out.z1, 10);
    EXPECT_NEAR(out.phase_big_phi, 0.0, 1e-12);
}

TEST(Classification, TransmissionDoubletFields) {
    auto model = transmission(10.0, 1.0, 1.0);
    std::vector<double> p(21, 0.0);
    p[13] = 0.7;
    p[7] = 0.3;
    auto s = make_state(ZDistribution(range(0, 20), p, ZMeaning::AtomNumberAtKSites), model);
    s.apply_jump();
    s.advance_no_count(10.0 / s.tau_rate());
    auto out = classify_outcome(s, model);
    EXPECT_EQ(out.kind, OutcomeKind::Doublet);
    EXPECT_EQ(out.z1, 13);
    EXPECT_EQ(out.z2, 7);
    EXPECT_EQ(out.z1 + out.z2, 20);
    EXPECT_NEAR(out.delta_z, 3.0, 1e-15);
    EXPECT_NEAR(out.delta_z_predicted, 3.0, 1e-12);
    EXPECT_NEAR(out.phase_phi, -std::atan(3.0), 1e-15);
    EXPECT_NEAR(out.component_weights.first, 0.7, 1e-12);
    EXPECT_NEAR(out.component_weights.second, 0.3, 1e-12);
    EXPECT_NEAR(out.phase_big_phi, std::imag(prefactor_exponent(model, 13, s.t())), 1e-15);
}

TEST(Classification, TransmissionAsymmetricPeaksRejected) {
    auto model = transmission(10.0);
    std::vector<double> p(21, 0.0);
    p[12] = 0.5;
    p[4] = 0.5;
    auto s = make_state(ZDistribution(range(0, 20), p, ZMeaning::AtomNumberAtKSites), model);
    EXPECT_THROW(classify_outcome(s, model), ClassificationError);
}

TEST(RunTrajectory, MottStateIsStationaryWithPoissonCounts) {
    auto model = ProbeModel::transverse(Scenario::DiffractionMaximum, 1.0, 0.05);
    auto p0 = mott_distribution(lattice(10, 10, 4), scenario_geometry(Scenario::DiffractionMaximum, lattice(10, 10, 4)));
    TrajectorySetup setup{model, p0, {}, {200.0, 0.0, 0.0}, {}};
    long total_counts = 0;
    const int n = 200;
    double t_end = 0.0;
    for (int k = 0; k < n; ++k) {
        auto rec = run_trajectory(setup, 5, k);
        EXPECT_DOUBLE_EQ(rec.final_state.dist().probability_at(4), 1.0);
        total_counts += rec.final_state.m();
        t_end = rec.final_state.t();
    }
    double rate = 2 * model.kappa * std::norm(amplitude_scale(model)) * 16.0;
    double mean = rate * t_end;
    EXPECT_LT(std::abs(static_cast<double>(total_counts) / n - mean), 3 * std::sqrt(mean / n));
}

TEST(RunTrajectory, DeterministicInSeedAndStream) {
    auto model = transmission(10.0, 0.5);
    TrajectorySetup setup{model, superfluid_atom_number(lattice(20, 2, 1)), {}, {50.0, 0.0, 1e-9}, {1.0, {2.0, 5.0}}};
    auto a = run_trajectory(setup, 123, 4);
    auto b = run_trajectory(setup, 123, 4);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (size_t i = 0; i < a.samples.size(); ++i) {
        EXPECT_EQ(a.samples[i].t, b.samples[i].t);
        EXPECT_EQ(a.samples[i].m, b.samples[i].m);
        EXPECT_EQ(a.samples[i].mean_z, b.samples[i].mean_z);
    }
    EXPECT_EQ(a.final_state.jump_times(), b.final_state.jump_times());
    ASSERT_EQ(a.snapshots.size(), 2u);
    EXPECT_NEAR(a.snapshots[0].tau, 2.0, 1e-9);
    EXPECT_NEAR(a.snapshots[1].tau, 5.0, 1e-9);
    auto c = run_trajectory(setup, 123, 5);
    EXPECT_NE(a.final_state.jump_times(), c.final_state.jump_times());
}

TEST(RunTrajectory, SamplesOrderedOnCadence) {
    auto model = transmission(10.0, 0.5);
    TrajectorySetup setup{model, superfluid_atom_number(lattice(20, 2, 1)), {}, {10.0, 0.0, 0.0}, {0.5, {}}};
    auto rec = run_trajectory(setup, 1);
    ASSERT_GE(rec.samples.size(), 21u);
    for (size_t i = 1; i < rec.samples.size(); ++i) {
        EXPECT_GT(rec.samples[i].t, rec.samples[i - 1].t);
        EXPECT_GE(rec.samples[i].m, rec.samples[i - 1].m);
    }
    EXPECT_NEAR(rec.samples.back().tau, 10.0, 1e-9);
    EXPECT_TRUE(rec.outcome.has_value() || rec.classification_error.has_value());
}

TEST(RunEnsemble, ThreadCountDoesNotChangeResults) {
    auto model = transmission(10.0, 0.5);
    TrajectorySetup setup{model, superfluid_atom_number(lattice(20, 2, 1)), {}, {20.0, 0.0, 1e-9}, {}};
    auto one = run_ensemble(setup, 99, 16, 1);
    auto four = run_ensemble(setup, 99, 16, 4);
    ASSERT_EQ(one.size(), four.size());
    for (size_t i = 0; i < one.size(); ++i) {
        EXPECT_EQ(one[i].stream, i);
        EXPECT_EQ(one[i].final_state.jump_times(), four[i].final_state.jump_times());
    }
}

TEST(RunEnsemble, MeanCountFollowsInitialIntensity) {
    auto model = transmission(10.0, 0.5);
    auto p0 = superfluid_atom_number(lattice(20, 2, 1));
    TrajectorySetup setup{model, p0, {}, {4.0, 0.0, 0.0}, {}};
    auto runs = run_ensemble(setup, 2024, 1000);
    double sum = 0.0, sum2 = 0.0;
    for (const auto& r : runs) {
        sum += r.final_state.m();
        sum2 += static_cast<double>(r.final_state.m()) * r.final_state.m();
    }
    double n = static_cast<double>(runs.size());
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    auto table = amplitude_table(model, p0.z_values());
    double intensity0 = 0.0;
    for (size_t i = 0; i < p0.size(); ++i) intensity0 += table.intensity[i] * p0.p(i);
    double t = runs[0].final_state.t();
    double expected = 2 * model.kappa * t * intensity0;
    EXPECT_LT(std::abs(mean - expected), 3 * std::sqrt(var / n));
}
