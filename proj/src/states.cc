#include "backaction/states.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "backaction/errors.h"
#include "backaction/numerics.h"

namespace backaction {

namespace {

// Keeps decaying tails out of the subnormal range, where arithmetic is very slow.
double flush(double p) { return p < ZDistribution::kNegligible ? 0.0 : p; }

}  // namespace

ZDistribution::ZDistribution(std::vector<int> z_values, std::vector<double> probabilities, ZMeaning meaning)
    : z_(std::move(z_values)), p_(std::move(probabilities)), meaning_(meaning) {
    check_invariants();
    hi_ = p_.size();
    shrink_support();
}

void ZDistribution::shrink_support() {
    while (lo_ < hi_ && p_[lo_] == 0.0) {
        ++lo_;
    }
    while (hi_ > lo_ && p_[hi_ - 1] == 0.0) {
        --hi_;
    }
}

void ZDistribution::check_invariants() const {
    if (z_.size() != p_.size()) {
        throw std::invalid_argument("z values and probabilities differ in length");
    }
    if (z_.empty()) {
        throw std::invalid_argument("distribution must have at least one z value");
    }
    for (size_t i = 1; i < z_.size(); ++i) {
        if (z_[i] <= z_[i - 1]) {
            throw std::invalid_argument("z values must be strictly increasing");
        }
    }
    double total = 0.0;
    for (double p : p_) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw std::invalid_argument("probabilities must be finite and nonnegative");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > kNormTolerance) {
        throw std::invalid_argument("probabilities must sum to one");
    }
}

ZDistribution ZDistribution::from_weights(std::vector<int> z_values, std::vector<double> weights, ZMeaning meaning) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument("weights must be finite and nonnegative");
        }
        total += w;
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw std::invalid_argument("weights must have a positive finite total");
    }
    for (double& w : weights) {
        w /= total;
    }
    return ZDistribution(std::move(z_values), std::move(weights), meaning);
}

std::optional<size_t> ZDistribution::index_of(int z) const {
    auto it = std::lower_bound(z_.begin(), z_.end(), z);
    if (it == z_.end() || *it != z) {
        return std::nullopt;
    }
    return static_cast<size_t>(it - z_.begin());
}

double ZDistribution::probability_at(int z) const {
    auto i = index_of(z);
    return i ? p_[*i] : 0.0;
}

double ZDistribution::mean() const {
    double m = 0.0;
    for (size_t i = lo_; i < hi_; ++i) {
        m += z_[i] * p_[i];
    }
    return m;
}

double ZDistribution::variance() const {
    // Centered second moment; the raw-moment difference loses precision near collapse.
    double mu = mean();
    double v = 0.0;
    for (size_t i = lo_; i < hi_; ++i) {
        double d = z_[i] - mu;
        v += d * d * p_[i];
    }
    return v;
}

double ZDistribution::stddev() const { return std::sqrt(variance()); }

std::optional<double> ZDistribution::try_reweight(std::span<const double> factors) {
    if (factors.size() != p_.size()) {
        throw std::invalid_argument("factor count does not match distribution size");
    }
    double total = 0.0;
    for (size_t i = lo_; i < hi_; ++i) {
        total += p_[i] * factors[i];
    }
    if (!std::isnormal(total) || total < 1e-290) {
        return std::nullopt;
    }
    double inv = 1.0 / total;
    for (size_t i = lo_; i < hi_; ++i) {
        p_[i] = flush(p_[i] * factors[i] * inv);
    }
    shrink_support();
    return std::log(total);
}

double ZDistribution::reweight_log(std::span<const double> log_factors) {
    if (log_factors.size() != p_.size()) {
        throw std::invalid_argument("factor count does not match distribution size");
    }
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<double> logw(p_.size(), kNegInf);
    double peak = kNegInf;
    for (size_t i = 0; i < p_.size(); ++i) {
        if (p_[i] > 0.0 && log_factors[i] > kNegInf) {
            logw[i] = std::log(p_[i]) + log_factors[i];
            peak = std::max(peak, logw[i]);
        }
    }
    if (!(peak > kNegInf) || !std::isfinite(peak)) {
        throw NumericalAbort("total weight underflow: no support survives the update");
    }
    double total = 0.0;
    for (size_t i = 0; i < p_.size(); ++i) {
        p_[i] = std::exp(logw[i] - peak);
        total += p_[i];
    }
    for (double& p : p_) {
        p = flush(p / total);
    }
    shrink_support();
    return peak + std::log(total);
}

ZDistribution superfluid_atom_number(const LatticeSpec& spec) {
    spec.validate();
    const int n = spec.n_atoms;
    const double fraction = static_cast<double>(spec.n_illuminated) / spec.n_sites;
    std::vector<int> z(static_cast<size_t>(n) + 1);
    std::vector<double> p(z.size());
    for (int k = 0; k <= n; ++k) {
        z[static_cast<size_t>(k)] = k;
        p[static_cast<size_t>(k)] = binomial_pmf(n, k, fraction);
    }
    return ZDistribution::from_weights(std::move(z), std::move(p), ZMeaning::AtomNumberAtKSites);
}

ZDistribution superfluid_difference(const LatticeSpec& spec) {
    spec.validate();
    if (spec.n_illuminated != spec.n_sites) {
        throw std::invalid_argument("odd-even difference requires all sites illuminated (K == M)");
    }
    if (spec.n_sites % 2 != 0) {
        throw std::invalid_argument("odd-even difference superfluid requires an even number of sites");
    }
    const int n = spec.n_atoms;
    const double fraction = static_cast<double>(spec.odd_illuminated_count()) / spec.n_sites;
    std::vector<int> z(static_cast<size_t>(n) + 1);
    std::vector<double> p(z.size());
    for (int k = 0; k <= n; ++k) {
        z[static_cast<size_t>(k)] = 2 * k - n;
        p[static_cast<size_t>(k)] = binomial_pmf(n, k, fraction);
    }
    return ZDistribution::from_weights(std::move(z), std::move(p), ZMeaning::OddEvenDifference);
}

ZDistribution gaussian_approximation(double mean, double sigma, std::span<const int> z_grid, ZMeaning meaning) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("gaussian width must be positive");
    }
    if (z_grid.empty()) {
        throw std::invalid_argument("z grid is empty");
    }
    std::vector<double> logw(z_grid.size());
    double peak = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < z_grid.size(); ++i) {
        double d = (z_grid[i] - mean) / sigma;
        logw[i] = -0.5 * d * d;
        peak = std::max(peak, logw[i]);
    }
    std::vector<double> w(z_grid.size());
    for (size_t i = 0; i < z_grid.size(); ++i) {
        w[i] = std::exp(logw[i] - peak);
    }
    return ZDistribution::from_weights(std::vector<int>(z_grid.begin(), z_grid.end()), std::move(w), meaning);
}

ZDistribution mott_distribution(const LatticeSpec& spec, const ScenarioGeometry& geometry) {
    spec.validate();
    if (spec.n_atoms != spec.n_sites) {
        throw std::invalid_argument("Mott insulator requires unit filling (N == M)");
    }
    std::vector<int> ones(static_cast<size_t>(spec.n_sites), 1);
    int z0 = statistical_variable(ones, geometry.scenario, spec);
    std::vector<double> p(geometry.z_grid.size(), 0.0);
    bool placed = false;
    for (size_t i = 0; i < geometry.z_grid.size(); ++i) {
        if (geometry.z_grid[i] == z0) {
            p[i] = 1.0;
            placed = true;
        }
    }
    if (!placed) {
        throw std::invalid_argument("Mott value of z lies outside the scenario grid");
    }
    return ZDistribution(geometry.z_grid, std::move(p), geometry.meaning);
}

LoadedDistribution read_distribution(std::istream& in, ZMeaning meaning) {
    std::vector<std::pair<int, double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        std::string z_text;
        if (!(fields >> z_text)) {
            continue;
        }
        double p = 0.0;
        std::string extra;
        size_t used = 0;
        int z = 0;
        try {
            z = std::stoi(z_text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != z_text.size() || !(fields >> p) || (fields >> extra)) {
            // A non-numeric first row is treated as a header.
            if (rows.empty() && used == 0) {
                continue;
            }
            throw std::invalid_argument("malformed distribution row at line " + std::to_string(line_no));
        }
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw std::invalid_argument("negative or non-finite probability at line " + std::to_string(line_no));
        }
        rows.emplace_back(z, p);
    }
    if (rows.empty()) {
        throw std::invalid_argument("distribution file contains no rows");
    }
    std::sort(rows.begin(), rows.end());
    std::vector<int> z;
    std::vector<double> w;
    double total = 0.0;
    for (const auto& [zv, pv] : rows) {
        if (!z.empty() && z.back() == zv) {
            throw std::invalid_argument("duplicate z value " + std::to_string(zv));
        }
        z.push_back(zv);
        w.push_back(pv);
        total += pv;
    }
    std::optional<std::string> warning;
    if (std::abs(total - 1.0) > 1e-6) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "distribution probabilities sum to " << total << "; renormalized";
        warning = msg.str();
    }
    return {ZDistribution::from_weights(std::move(z), std::move(w), meaning), total, warning};
}

}  // namespace backaction
