#pragma once

#include <cstdint>

namespace backaction {

double log_factorial(int n);
double log_binomial(int n, int k);

/// Binomial probability C(n,k) p^k (1-p)^(n-k), evaluated in log space.
double binomial_pmf(int n, int k, double p);

/// Poisson probability lambda^n e^-lambda / n!, evaluated in log space.
double poisson_pmf(int n, double lambda);

/// SplitMix64 mixing step; used to derive independent per-trajectory seeds.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace backaction
