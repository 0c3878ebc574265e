#include "backaction/purity.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace backaction {

void CatMixture::validate() const {
    if (losses < 0) {
        throw std::invalid_argument("number of lost counts must be nonnegative");
    }
    auto [w1, w2] = weights;
    if (!(w1 >= 0.0) || !(w2 >= 0.0) || std::abs(w1 + w2 - 1.0) > 1e-12) {
        throw std::invalid_argument("component weights must be nonnegative and sum to one");
    }
    if (!std::isfinite(phi) || !std::isfinite(gamma)) {
        throw std::invalid_argument("phases must be finite");
    }
}

namespace {

std::complex<double> mean_phase_factor(int losses, double phi) {
    std::complex<double> sum = 0.0;
    for (int l = 0; l <= losses; ++l) {
        sum += std::polar(1.0, 2.0 * l * phi);
    }
    return sum / static_cast<double>(losses + 1);
}

}  // namespace

Eigen::Matrix2cd density_matrix(const CatMixture& mix) {
    mix.validate();
    auto [w1, w2] = mix.weights;
    std::complex<double> coherence =
        std::sqrt(w1 * w2) * std::polar(1.0, 2.0 * mix.gamma) * mean_phase_factor(mix.losses, mix.phi);
    Eigen::Matrix2cd rho;
    rho << w1, coherence, std::conj(coherence), w2;
    return rho;
}

double purity(int losses, double phi) {
    if (losses < 0) {
        throw std::invalid_argument("number of lost counts must be nonnegative");
    }
    if (losses == 0) {
        return 1.0;
    }
    const double n = losses + 1.0;
    double s = std::sin(phi);
    double ratio;
    if (std::abs(s) < 1e-8) {
        ratio = std::norm(mean_phase_factor(losses, phi));
    } else {
        double num = std::sin(n * phi);
        ratio = num * num / (n * n * s * s);
    }
    return std::clamp(0.5 * (1.0 + ratio), 0.5, 1.0);
}

double purity_from_matrix(const Eigen::Matrix2cd& rho) { return (rho * rho).trace().real(); }

std::vector<PurityPoint> purity_sweep(std::span<const int> losses, std::span<const double> delta_z_grid,
                                      const ProbeModel& model) {
    if (model.scenario != Scenario::Transmission) {
        throw std::invalid_argument("purity sweep uses the transmission cat phase");
    }
    model.validate();
    std::vector<PurityPoint> out;
    out.reserve(losses.size() * delta_z_grid.size());
    for (int l : losses) {
        for (double dz : delta_z_grid) {
            double phi = cat_phase(model, dz);
            out.push_back({dz, model.u11 * dz / model.kappa, l, purity(l, phi)});
        }
    }
    return out;
}

}  // namespace backaction
