#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "backaction/optics.h"
#include "backaction/states.h"

namespace backaction {

class TrajectoryState;

enum class PhotonKind { CavityNumber, Counts, ConditionalCounts };

std::string_view to_string(PhotonKind kind);

/// Distribution over n = 0..n_max, truncated where the neglected tail drops below 1e-10.
struct PhotonDistribution {
    std::vector<int> n_values;
    std::vector<double> probabilities;
    PhotonKind kind = PhotonKind::CavityNumber;
    /// Probability mass beyond n_max before renormalization.
    double tail_mass = 0.0;

    double mean() const;
    double variance() const;
    /// variance / mean; NaN for a zero mean.
    double fano() const;
    /// variance / mean - 1.
    double mandel_q() const;
};

inline constexpr double kPhotonTailBound = 1e-10;

/// sum_z w_z Poisson(n; rate_z), truncated at tail < 1e-10.
PhotonDistribution poisson_mixture(std::span<const double> rates, std::span<const double> weights, PhotonKind kind);

/// Cavity photon number distribution of the conditional state.
PhotonDistribution cavity_photon_distribution(const TrajectoryState& state);

/// P(m, t) = sum_z Poisson(m; 2 kappa |alpha_z|^2 t) p0(z), steady regime.
PhotonDistribution photocount_distribution(const ZDistribution& p0, const AmplitudeTable& amplitudes, double kappa,
                                           double t);

/// Counts in the window (T, t] given the conditional distribution reached at T.
/// t == T yields a point mass at zero; t < T throws std::invalid_argument.
PhotonDistribution conditional_photocount_distribution(const ZDistribution& p_T, const AmplitudeTable& amplitudes,
                                                       double kappa, double T, double t);

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    /// Bins after pooling.
    int bins = 0;
};

/// Pearson goodness of fit of observed counts against expected probabilities
/// (same indexing). Adjacent bins are pooled until each expects at least
/// `min_expected` events; the pooled remainder joins the last bin.
ChiSquareResult chi_square_gof(std::span<const long> observed, std::span<const double> expected_probabilities,
                               double min_expected = 5.0);

}  // namespace backaction
