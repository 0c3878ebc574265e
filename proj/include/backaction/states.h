#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "backaction/geometry.h"

namespace backaction {

/// Probability vector over the scenario's statistical variable z.
///
/// Invariants: z values strictly increasing, probabilities nonnegative and
/// summing to one within 1e-12. Updates go through the reweighting methods,
/// which renormalize eagerly.
class ZDistribution {
   public:
    static constexpr double kNormTolerance = 1e-12;
    /// Probabilities below this are set to zero by the reweighting methods.
    static constexpr double kNegligible = 1e-300;

    /// Validates the invariants; throws std::invalid_argument on violation.
    ZDistribution(std::vector<int> z_values, std::vector<double> probabilities, ZMeaning meaning);

    /// Normalizes arbitrary nonnegative weights (total must be positive and finite).
    static ZDistribution from_weights(std::vector<int> z_values, std::vector<double> weights, ZMeaning meaning);

    const std::vector<int>& z_values() const { return z_; }
    std::span<const double> probabilities() const { return p_; }
    ZMeaning meaning() const { return meaning_; }
    size_t size() const { return z_.size(); }
    int z(size_t i) const { return z_[i]; }
    double p(size_t i) const { return p_[i]; }

    std::optional<size_t> index_of(int z) const;
    /// Probability of z, or 0 when z is not on the grid.
    double probability_at(int z) const;

    /// Half-open index range outside of which every probability is exactly zero.
    std::pair<size_t, size_t> support() const { return {lo_, hi_}; }

    double mean() const;
    double variance() const;
    double stddev() const;

    /// p <- p * f / sum(p * f). Returns log(sum(p * f)), or nullopt (leaving the
    /// distribution untouched) when the weighted sum is not a normal positive number.
    std::optional<double> try_reweight(std::span<const double> factors);

    /// Same update with the factors given as logarithms; immune to underflow.
    /// Throws NumericalAbort when no support survives.
    double reweight_log(std::span<const double> log_factors);

   private:
    void check_invariants() const;
    void shrink_support();

    std::vector<int> z_;
    std::vector<double> p_;
    ZMeaning meaning_ = ZMeaning::AtomNumberAtKSites;
    size_t lo_ = 0;
    size_t hi_ = 0;
};

/// Binomial atom number at the K illuminated sites of a superfluid.
ZDistribution superfluid_atom_number(const LatticeSpec& spec);

/// Odd-minus-even atom number difference of a superfluid with all (an even
/// number of) sites illuminated: z = 2 z~ - N with z~ ~ Binomial(N, Q/M).
ZDistribution superfluid_difference(const LatticeSpec& spec);

/// Discrete Gaussian renormalized on the grid. As sigma shrinks relative to the
/// grid spacing this tends to a point mass at the nearest grid value.
ZDistribution gaussian_approximation(double mean, double sigma, std::span<const int> z_grid, ZMeaning meaning);

/// Unit-filling Mott insulator: a point mass at the value z takes for |1,1,...,1>.
ZDistribution mott_distribution(const LatticeSpec& spec, const ScenarioGeometry& geometry);

struct LoadedDistribution {
    ZDistribution distribution;
    double raw_sum = 1.0;
    /// Set when the file's probabilities summed to something further than 1e-6 from one.
    std::optional<std::string> warning;
};

/// Reads a two-column (z, probability) table. Columns may be separated by
/// whitespace or commas; '#' starts a comment. Rows are sorted by z.
LoadedDistribution read_distribution(std::istream& in, ZMeaning meaning);

}  // namespace backaction
