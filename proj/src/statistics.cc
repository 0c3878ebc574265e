#include "backaction/statistics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "backaction/numerics.h"
#include "backaction/trajectory.h"

namespace backaction {

std::string_view to_string(PhotonKind kind) {
    switch (kind) {
        case PhotonKind::CavityNumber:
            return "cavity_number";
        case PhotonKind::Counts:
            return "counts";
        case PhotonKind::ConditionalCounts:
            return "conditional_counts";
    }
    return "unknown";
}

double PhotonDistribution::mean() const {
    double m = 0.0;
    for (size_t i = 0; i < n_values.size(); ++i) {
        m += n_values[i] * probabilities[i];
    }
    return m;
}

double PhotonDistribution::variance() const {
    double mu = mean();
    double v = 0.0;
    for (size_t i = 0; i < n_values.size(); ++i) {
        double d = n_values[i] - mu;
        v += d * d * probabilities[i];
    }
    return v;
}

double PhotonDistribution::fano() const {
    double mu = mean();
    return mu > 0.0 ? variance() / mu : std::numeric_limits<double>::quiet_NaN();
}

double PhotonDistribution::mandel_q() const { return fano() - 1.0; }

namespace {

// Probability that Poisson(rate) exceeds n.
double poisson_upper_tail(int n, double rate) {
    return rate > 0.0 ? boost::math::gamma_p(static_cast<double>(n) + 1.0, rate) : 0.0;
}

}  // namespace

PhotonDistribution poisson_mixture(std::span<const double> rates, std::span<const double> weights, PhotonKind kind) {
    if (rates.size() != weights.size() || rates.empty()) {
        throw std::invalid_argument("rates and weights must be nonempty and of equal length");
    }
    double total = 0.0;
    double max_rate = 0.0;
    for (size_t i = 0; i < rates.size(); ++i) {
        if (!(rates[i] >= 0.0) || !std::isfinite(rates[i]) || !(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
            throw std::invalid_argument("rates and weights must be finite and nonnegative");
        }
        total += weights[i];
        if (weights[i] > 0.0) {
            max_rate = std::max(max_rate, rates[i]);
        }
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("mixture weights must have a positive total");
    }

    auto tail = [&](int n) {
        double t = 0.0;
        for (size_t i = 0; i < rates.size(); ++i) {
            if (weights[i] > 0.0) {
                t += weights[i] / total * poisson_upper_tail(n, rates[i]);
            }
        }
        return t;
    };
    int n_max = static_cast<int>(std::ceil(max_rate + 10.0 * std::sqrt(max_rate) + 10.0));
    double tail_mass = tail(n_max);
    while (tail_mass >= kPhotonTailBound) {
        n_max = n_max + n_max / 4 + 10;
        tail_mass = tail(n_max);
    }

    PhotonDistribution out;
    out.kind = kind;
    out.tail_mass = tail_mass;
    out.n_values.resize(static_cast<size_t>(n_max) + 1);
    out.probabilities.assign(out.n_values.size(), 0.0);
    for (int n = 0; n <= n_max; ++n) {
        out.n_values[static_cast<size_t>(n)] = n;
    }
    for (size_t i = 0; i < rates.size(); ++i) {
        if (weights[i] <= 0.0) {
            continue;
        }
        double w = weights[i] / total;
        for (int n = 0; n <= n_max; ++n) {
            out.probabilities[static_cast<size_t>(n)] += w * poisson_pmf(n, rates[i]);
        }
    }
    double sum = 0.0;
    for (double p : out.probabilities) {
        sum += p;
    }
    for (double& p : out.probabilities) {
        p /= sum;
    }
    return out;
}

PhotonDistribution cavity_photon_distribution(const TrajectoryState& state) {
    const auto& dist = state.dist();
    return poisson_mixture(state.amplitudes().intensity, dist.probabilities(), PhotonKind::CavityNumber);
}

namespace {

PhotonDistribution counting_mixture(const ZDistribution& p, const AmplitudeTable& amplitudes, double kappa,
                                    double window, PhotonKind kind) {
    if (amplitudes.z_values != p.z_values()) {
        throw std::invalid_argument("amplitude table does not match the distribution grid");
    }
    std::vector<double> rates(p.size());
    for (size_t i = 0; i < p.size(); ++i) {
        rates[i] = 2.0 * kappa * amplitudes.intensity[i] * window;
    }
    return poisson_mixture(rates, p.probabilities(), kind);
}

}  // namespace

PhotonDistribution photocount_distribution(const ZDistribution& p0, const AmplitudeTable& amplitudes, double kappa,
                                           double t) {
    if (!(t >= 0.0)) {
        throw std::invalid_argument("counting time must be nonnegative");
    }
    return counting_mixture(p0, amplitudes, kappa, t, PhotonKind::Counts);
}

PhotonDistribution conditional_photocount_distribution(const ZDistribution& p_T, const AmplitudeTable& amplitudes,
                                                       double kappa, double T, double t) {
    if (t < T) {
        throw std::invalid_argument("conditional counting window requires t >= T");
    }
    if (t == T) {
        PhotonDistribution out;
        out.kind = PhotonKind::ConditionalCounts;
        out.n_values = {0};
        out.probabilities = {1.0};
        return out;
    }
    return counting_mixture(p_T, amplitudes, kappa, t - T, PhotonKind::ConditionalCounts);
}

ChiSquareResult chi_square_gof(std::span<const long> observed, std::span<const double> expected_probabilities,
                               double min_expected) {
    if (observed.size() != expected_probabilities.size() || observed.empty()) {
        throw std::invalid_argument("observed and expected must be nonempty and of equal length");
    }
    double n = 0.0;
    for (long o : observed) {
        if (o < 0) {
            throw std::invalid_argument("observed counts must be nonnegative");
        }
        n += static_cast<double>(o);
    }
    if (!(n > 0.0)) {
        throw std::invalid_argument("no observations");
    }

    std::vector<double> obs_bins;
    std::vector<double> exp_bins;
    double o_acc = 0.0;
    double e_acc = 0.0;
    for (size_t i = 0; i < observed.size(); ++i) {
        o_acc += static_cast<double>(observed[i]);
        e_acc += n * expected_probabilities[i];
        if (e_acc >= min_expected) {
            obs_bins.push_back(o_acc);
            exp_bins.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    if (o_acc > 0.0 || e_acc > 0.0) {
        if (exp_bins.empty()) {
            obs_bins.push_back(o_acc);
            exp_bins.push_back(e_acc);
        } else {
            obs_bins.back() += o_acc;
            exp_bins.back() += e_acc;
        }
    }

    ChiSquareResult out;
    out.bins = static_cast<int>(exp_bins.size());
    for (size_t i = 0; i < exp_bins.size(); ++i) {
        double d = obs_bins[i] - exp_bins[i];
        out.statistic += exp_bins[i] > 0.0 ? d * d / exp_bins[i] : (d != 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    }
    out.dof = out.bins - 1;
    out.p_value = out.dof > 0 ? boost::math::gamma_q(0.5 * out.dof, 0.5 * out.statistic) : 1.0;
    return out;
}

}  // namespace backaction
