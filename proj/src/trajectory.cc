#include "backaction/trajectory.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "backaction/errors.h"
#include "backaction/numerics.h"

namespace backaction {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxJumpProbability = 0.05;
constexpr int kCollapseCheckInterval = 64;

bool reached(double tau, double mark) { return tau >= mark - 1e-9 * std::max(1.0, std::abs(mark)); }

}  // namespace

TrajectoryState::TrajectoryState(ZDistribution initial, std::shared_ptr<const AmplitudeTable> amplitudes, double kappa)
    : dist_(std::move(initial)), amplitudes_(std::move(amplitudes)), kappa_(kappa) {
    if (!amplitudes_) {
        throw std::invalid_argument("amplitude table is required");
    }
    if (amplitudes_->z_values != dist_.z_values()) {
        throw std::invalid_argument("amplitude table does not match the distribution grid");
    }
    if (!(kappa_ > 0.0)) {
        throw std::invalid_argument("kappa must be positive");
    }
    tau_rate_ = 2.0 * amplitudes_->reduced_scale() * kappa_;
    if (!(tau_rate_ > 0.0) || !std::isfinite(tau_rate_)) {
        throw std::invalid_argument("amplitude scale must be nonzero and finite");
    }
}

double TrajectoryState::mean_intensity() const {
    const auto& intensity = amplitudes_->intensity;
    auto [lo, hi] = dist_.support();
    double n = 0.0;
    for (size_t i = lo; i < hi; ++i) {
        n += intensity[i] * dist_.p(i);
    }
    return n;
}

double TrajectoryState::jump_probability(double dt) const { return 2.0 * kappa_ * mean_intensity() * dt; }

double TrajectoryState::max_step(double cap) const {
    const auto& intensity = amplitudes_->intensity;
    auto [lo, hi] = dist_.support();
    double brightest = 0.0;
    for (size_t i = lo; i < hi; ++i) {
        if (dist_.p(i) > 1e-15) {
            brightest = std::max(brightest, intensity[i]);
        }
    }
    return brightest > 0.0 ? cap / (2.0 * kappa_ * brightest) : kInf;
}

void TrajectoryState::advance_no_count(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("no-count step requires a finite dt > 0");
    }
    const auto& intensity = amplitudes_->intensity;
    if (dt != decay_dt_) {
        decay_.resize(intensity.size());
        for (size_t i = 0; i < intensity.size(); ++i) {
            decay_[i] = std::exp(-2.0 * kappa_ * intensity[i] * dt);
        }
        decay_dt_ = dt;
    }
    if (auto lognorm = dist_.try_reweight(decay_)) {
        log_norm_ += *lognorm;
    } else {
        std::vector<double> logf(intensity.size());
        for (size_t i = 0; i < intensity.size(); ++i) {
            logf[i] = -2.0 * kappa_ * intensity[i] * dt;
        }
        log_norm_ += dist_.reweight_log(logf);
    }
    t_ += dt;
}

void TrajectoryState::apply_jump() {
    if (!(mean_intensity() > 0.0)) {
        throw NumericalAbort("photocount in a dark state: all weight has alpha_z = 0");
    }
    const auto& intensity = amplitudes_->intensity;
    if (auto lognorm = dist_.try_reweight(intensity)) {
        log_norm_ += *lognorm;
    } else {
        std::vector<double> logf(intensity.size());
        for (size_t i = 0; i < intensity.size(); ++i) {
            logf[i] = intensity[i] > 0.0 ? std::log(intensity[i]) : -kInf;
        }
        log_norm_ += dist_.reweight_log(logf);
    }
    jump_times_.push_back(t_);
}

bool TrajectoryState::advance_mc(double dt, double u) {
    double probability = jump_probability(dt);
    if (probability > kMaxJumpProbability * (1.0 + 1e-12)) {
        throw std::invalid_argument("time step too large: jump probability exceeds 0.05");
    }
    bool jumped = probability > u;
    if (jumped) {
        apply_jump();
    }
    advance_no_count(dt);
    return jumped;
}

TrajectoryState no_count_step(TrajectoryState state, double dt) {
    state.advance_no_count(dt);
    return state;
}

TrajectoryState jump(TrajectoryState state) {
    state.apply_jump();
    return state;
}

std::pair<TrajectoryState, bool> mc_step(TrajectoryState state, double dt, double u) {
    bool jumped = state.advance_mc(dt, u);
    return {std::move(state), jumped};
}

ZDistribution closed_form_distribution(const ZDistribution& p0, const AmplitudeTable& amplitudes, double kappa, int m,
                                       double t) {
    if (amplitudes.z_values != p0.z_values()) {
        throw std::invalid_argument("amplitude table does not match the distribution grid");
    }
    if (m < 0 || t < 0.0) {
        throw std::invalid_argument("count and time must be nonnegative");
    }
    std::vector<double> logw(p0.size(), -kInf);
    double peak = -kInf;
    for (size_t i = 0; i < p0.size(); ++i) {
        double intensity = amplitudes.intensity[i];
        if (p0.p(i) <= 0.0 || (m > 0 && intensity <= 0.0)) {
            continue;
        }
        double count_term = m > 0 ? m * std::log(intensity) : 0.0;
        logw[i] = std::log(p0.p(i)) + count_term - 2.0 * kappa * intensity * t;
        peak = std::max(peak, logw[i]);
    }
    if (!std::isfinite(peak)) {
        throw NumericalAbort("closed form has no surviving support");
    }
    std::vector<double> w(p0.size());
    for (size_t i = 0; i < p0.size(); ++i) {
        w[i] = std::exp(logw[i] - peak);
    }
    return ZDistribution::from_weights(p0.z_values(), std::move(w), p0.meaning());
}

double conditional_photon_number(const TrajectoryState& state) { return state.mean_intensity(); }

double conditional_photon_number_reduced(const TrajectoryState& state) {
    return state.mean_intensity() / state.amplitudes().reduced_scale();
}

double mandel_q(const TrajectoryState& state) {
    double mean = state.mean_intensity();
    if (!(mean > 0.0)) {
        throw std::domain_error("Mandel parameter undefined for a dark state");
    }
    const auto& intensity = state.amplitudes().intensity;
    const auto& dist = state.dist();
    double var = 0.0;
    for (size_t i = 0; i < dist.size(); ++i) {
        double d = intensity[i] - mean;
        var += d * d * dist.p(i);
    }
    return var / mean;
}

double mandel_q_reduced(const TrajectoryState& state) { return mandel_q(state) / state.amplitudes().reduced_scale(); }

double width(const TrajectoryState& state) { return state.dist().stddev(); }

std::vector<size_t> find_peaks(const ZDistribution& dist, double threshold) {
    std::vector<size_t> peaks;
    const size_t n = dist.size();
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && dist.p(j + 1) == dist.p(i)) {
            ++j;
        }
        bool left = i == 0 || dist.p(i - 1) < dist.p(i);
        bool right = j == n - 1 || dist.p(j + 1) < dist.p(i);
        if (left && right && dist.p(i) > threshold) {
            peaks.push_back(i);
        }
        i = j + 1;
    }
    return peaks;
}

double fwhm_of_peak(const ZDistribution& dist, size_t peak) {
    if (peak >= dist.size()) {
        throw std::out_of_range("peak index outside the grid");
    }
    const double half = 0.5 * dist.p(peak);
    auto crossing = [&](size_t inside, size_t outside) {
        double frac = (half - dist.p(outside)) / (dist.p(inside) - dist.p(outside));
        return dist.z(outside) + frac * (dist.z(inside) - dist.z(outside));
    };
    size_t k = peak;
    while (k > 0 && dist.p(k - 1) >= half) {
        --k;
    }
    double lo = k == 0 ? dist.z(0) : crossing(k, k - 1);
    k = peak;
    while (k + 1 < dist.size() && dist.p(k + 1) >= half) {
        ++k;
    }
    double hi = k + 1 == dist.size() ? dist.z(k) : crossing(k, k + 1);
    return hi - lo;
}

double collapse_residual(const ZDistribution& dist) {
    double on_peaks = 0.0;
    for (size_t i : find_peaks(dist, 0.0)) {
        on_peaks += dist.p(i);
    }
    return std::max(0.0, 1.0 - on_peaks);
}

double doublet_splitting(int m, double tau, double kappa_over_u11) {
    if (m == 0) {
        return kInf;
    }
    double ratio = tau / m - 1.0;
    if (ratio < 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return std::abs(kappa_over_u11) * std::sqrt(ratio);
}

WidthPrediction predicted_width(Scenario scenario, int m, double tau, double kappa_over_u11) {
    if (!(tau > 0.0)) {
        throw std::invalid_argument("width prediction requires tau > 0");
    }
    const double ln2x2 = 2.0 * std::numbers::ln2;
    WidthPrediction out;
    if (scenario != Scenario::Transmission) {
        out.regime = WidthRegime::TransversePeak;
        out.center_offset = std::sqrt(m / tau);
        out.fwhm = std::sqrt(ln2x2 / tau);
        out.guard_satisfied = out.fwhm <= out.center_offset / 3.0;
        return out;
    }
    const double r = std::abs(kappa_over_u11);
    if (m >= tau) {
        out.regime = WidthRegime::TransmissionSinglet;
        out.fwhm = 2.0 * r * std::pow(ln2x2 / tau, 0.25);
        out.guard_satisfied = out.fwhm <= r / 3.0;
        return out;
    }
    out.regime = WidthRegime::TransmissionDoublet;
    out.center_offset = doublet_splitting(m, tau, r);
    if (!std::isfinite(out.center_offset) || out.center_offset == 0.0) {
        out.fwhm = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    double dz = out.center_offset;
    out.fwhm = dz * (1.0 + r * r / (dz * dz)) * std::sqrt(ln2x2 / tau * (1.0 + dz * dz / (r * r)));
    out.guard_satisfied = out.fwhm <= dz / 3.0;
    return out;
}

std::string_view to_string(OutcomeKind kind) { return kind == OutcomeKind::Singlet ? "singlet" : "doublet"; }

namespace {

std::string describe_peaks(const ZDistribution& dist, const std::vector<size_t>& peaks) {
    std::string text = std::to_string(peaks.size()) + " peaks at z =";
    for (size_t i : peaks) {
        text += " " + std::to_string(dist.z(i));
    }
    return text;
}

std::pair<double, double> side_weights(const ZDistribution& dist, double center) {
    double above = 0.0;
    double below = 0.0;
    for (size_t i = 0; i < dist.size(); ++i) {
        if (dist.z(i) > center) {
            above += dist.p(i);
        } else if (dist.z(i) < center) {
            below += dist.p(i);
        }
    }
    double total = above + below;
    if (!(total > 0.0)) {
        return {0.5, 0.5};
    }
    return {above / total, below / total};
}

OutcomeReport classify_transverse(const TrajectoryState& state, const ProbeModel& model,
                                  const std::vector<size_t>& peaks) {
    const auto& dist = state.dist();
    OutcomeReport out;
    out.delta_z_predicted = std::sqrt(state.m() / state.tau());
    if (model.scenario == Scenario::DiffractionMaximum) {
        if (peaks.size() != 1) {
            throw ClassificationError("diffraction maximum should collapse to one peak; found " +
                                      describe_peaks(dist, peaks));
        }
        out.z1 = out.z2 = dist.z(peaks[0]);
        out.phase_big_phi = std::imag(prefactor_exponent(model, out.z1, state.t()));
        return out;
    }
    if (peaks.size() == 1 && dist.z(peaks[0]) == 0) {
        out.z1 = out.z2 = 0;
        return out;
    }
    if (peaks.size() != 2 || dist.z(peaks[0]) != -dist.z(peaks[1])) {
        throw ClassificationError("diffraction minimum should give a +-z doublet; found " + describe_peaks(dist, peaks));
    }
    out.kind = OutcomeKind::Doublet;
    out.z1 = dist.z(peaks[1]);
    out.z2 = dist.z(peaks[0]);
    out.delta_z = out.z1;
    out.phase_phi = std::numbers::pi / 2.0;
    out.phase_big_phi = std::imag(prefactor_exponent(model, out.z1, state.t()));
    out.component_weights = side_weights(dist, 0.0);
    return out;
}

OutcomeReport classify_transmission(const TrajectoryState& state, const ProbeModel& model,
                                    const std::vector<size_t>& peaks) {
    const auto& dist = state.dist();
    const double z_p = resonance_center(model);
    const double ratio = state.m() / state.tau();
    OutcomeReport out;
    out.delta_z_predicted = doublet_splitting(state.m(), state.tau(), model.kappa / model.u11);

    if (peaks.size() == 1 && ratio >= 1.0) {
        out.z1 = out.z2 = dist.z(peaks[0]);
        out.phase_big_phi = std::imag(prefactor_exponent(model, out.z1, state.t()));
        return out;
    }
    out.kind = OutcomeKind::Doublet;
    if (peaks.size() == 2) {
        int lo = dist.z(peaks[0]);
        int hi = dist.z(peaks[1]);
        if (std::abs(lo + hi - 2.0 * z_p) > 1.0) {
            throw ClassificationError("doublet satellites not symmetric about z_p; found " +
                                      describe_peaks(dist, peaks));
        }
        out.z1 = hi;
        out.z2 = lo;
        out.delta_z = 0.5 * (hi - lo);
    } else if (peaks.size() == 1) {
        // The partner satellite may fall below the detection threshold on the wing.
        int z = dist.z(peaks[0]);
        double mirror = std::round(2.0 * z_p - z);
        out.z1 = std::max(z, static_cast<int>(mirror));
        out.z2 = std::min(z, static_cast<int>(mirror));
        out.delta_z = 0.5 * (out.z1 - out.z2);
    } else {
        throw ClassificationError("transmission outcome is neither singlet nor doublet; found " +
                                  describe_peaks(dist, peaks));
    }
    out.phase_phi = cat_phase(model, out.delta_z);
    out.phase_big_phi = std::imag(prefactor_exponent(model, out.z1, state.t()));
    out.component_weights = side_weights(dist, z_p);
    return out;
}

}  // namespace

OutcomeReport classify_outcome(const TrajectoryState& state, const ProbeModel& model) {
    auto peaks = find_peaks(state.dist());
    if (model.scenario == Scenario::Transmission) {
        return classify_transmission(state, model, peaks);
    }
    return classify_transverse(state, model, peaks);
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed;
    std::uint64_t base = splitmix64(s);
    std::uint64_t mixed = base ^ (stream * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL);
    return std::mt19937_64(splitmix64(mixed));
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

namespace {

Sample take_sample(const TrajectoryState& state) {
    Sample s;
    s.t = state.t();
    s.tau = state.tau();
    s.m = state.m();
    s.mean_z = state.dist().mean();
    s.width = width(state);
    s.cond_photons_reduced = conditional_photon_number_reduced(state);
    s.mandel_q_reduced =
        state.mean_intensity() > 0.0 ? mandel_q_reduced(state) : std::numeric_limits<double>::quiet_NaN();
    return s;
}

}  // namespace

RunRecord run_trajectory(const TrajectorySetup& setup, std::uint64_t seed, std::uint64_t stream,
                         const StepObserver& observer) {
    const auto& stop = setup.stop;
    if (!(stop.max_tau > 0.0) || !std::isfinite(stop.max_tau)) {
        throw std::invalid_argument("stop condition needs a finite max_tau > 0");
    }
    const double cap = setup.step.max_jump_probability;
    if (!(cap > 0.0) || cap > kMaxJumpProbability) {
        throw std::invalid_argument("max_jump_probability must lie in (0, 0.05]");
    }
    auto table = std::make_shared<const AmplitudeTable>(amplitude_table(setup.model, setup.initial.z_values()));
    TrajectoryState state(setup.initial, table, setup.model.kappa);
    auto rng = make_stream(seed, stream);

    std::vector<double> snapshot_taus = setup.schedule.snapshot_taus;
    std::sort(snapshot_taus.begin(), snapshot_taus.end());
    size_t next_snapshot = 0;
    const double interval = setup.schedule.sample_interval_tau;
    double next_sample = interval > 0.0 ? interval : kInf;

    std::vector<Sample> samples{take_sample(state)};
    std::vector<Snapshot> snapshots;
    bool collapsed = false;
    std::uint64_t steps = 0;
    double dt_current = 0.0;

    while (true) {
        while (next_snapshot < snapshot_taus.size() && reached(state.tau(), snapshot_taus[next_snapshot])) {
            snapshots.push_back({state.t(), state.tau(), state.m(), state.dist()});
            ++next_snapshot;
        }
        if (reached(state.tau(), stop.max_tau)) {
            break;
        }
        if (steps % kCollapseCheckInterval == 0 && stop.residual_mass > 0.0 && state.tau() >= stop.min_tau &&
            collapse_residual(state.dist()) < stop.residual_mass) {
            collapsed = true;
            break;
        }
        double target = state.max_step(cap);
        if (!(dt_current > 0.0) || target < dt_current || target > 1.5 * dt_current) {
            dt_current = target;
        }
        double mark = stop.max_tau;
        mark = std::min(mark, next_sample);
        if (next_snapshot < snapshot_taus.size()) {
            mark = std::min(mark, snapshot_taus[next_snapshot]);
        }
        double dt = std::min(dt_current, (mark - state.tau()) / state.tau_rate());
        bool jumped = state.advance_mc(dt, uniform01(rng));
        ++steps;
        if (observer) {
            observer(state, jumped);
        }
        if (reached(state.tau(), next_sample)) {
            samples.push_back(take_sample(state));
            while (reached(state.tau(), next_sample)) {
                next_sample += interval;
            }
        }
    }
    if (samples.back().t != state.t()) {
        samples.push_back(take_sample(state));
    }

    RunRecord record{std::move(samples), std::move(snapshots), std::nullopt, std::nullopt, seed, stream,
                     collapsed,          steps,                state};
    try {
        record.outcome = classify_outcome(record.final_state, setup.model);
    } catch (const ClassificationError& e) {
        record.classification_error = e.what();
    }
    return record;
}

std::vector<RunRecord> run_ensemble(const TrajectorySetup& setup, std::uint64_t seed, int n_traj, int threads) {
    if (n_traj < 0) {
        throw std::invalid_argument("ensemble size must be nonnegative");
    }
    if (threads <= 0) {
        threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    threads = std::max(1, std::min(threads, n_traj));
    std::vector<std::optional<RunRecord>> slots(static_cast<size_t>(n_traj));
    std::vector<std::exception_ptr> errors(static_cast<size_t>(n_traj));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n_traj; i = next++) {
            try {
                slots[static_cast<size_t>(i)] = run_trajectory(setup, seed, static_cast<std::uint64_t>(i));
            } catch (...) {
                errors[static_cast<size_t>(i)] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < threads; ++k) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    std::vector<RunRecord> out;
    out.reserve(slots.size());
    for (auto& s : slots) {
        out.push_back(std::move(*s));
    }
    return out;
}

}  // namespace backaction
