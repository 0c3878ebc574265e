#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "backaction/optics.h"

namespace backaction {

/// Two-component cat state after L of its photocounts went undetected.
struct CatMixture {
    /// Half of the relative phase acquired per count.
    double phi = 0.0;
    /// Known relative phase m phi + Phi(t).
    double gamma = 0.0;
    int losses = 0;
    std::pair<double, double> weights{0.5, 0.5};

    void validate() const;
};

/// Mixture over the L+1 equally likely numbers of true counts, in the basis
/// of the two (orthonormal) cat components.
Eigen::Matrix2cd density_matrix(const CatMixture& mix);

/// Closed-form Tr(rho^2) for the symmetric mixture; 1 at phi = 0 mod pi.
double purity(int losses, double phi);

double purity_from_matrix(const Eigen::Matrix2cd& rho);

struct PurityPoint {
    double delta_z = 0.0;
    /// U11 delta_z / kappa.
    double scaled_splitting = 0.0;
    int losses = 0;
    double purity = 0.0;
};

/// P_L over the splitting grid for each L, with phi from the transmission cat phase.
std::vector<PurityPoint> purity_sweep(std::span<const int> losses, std::span<const double> delta_z_grid,
                                      const ProbeModel& model);

}  // namespace backaction
