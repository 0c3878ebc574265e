#include "backaction/numerics.h"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace backaction {

double log_factorial(int n) {
    if (n < 0) {
        throw std::invalid_argument("log_factorial of a negative number");
    }
    return std::lgamma(static_cast<double>(n) + 1.0);
}

double log_binomial(int n, int k) {
    if (k < 0 || k > n) {
        return -std::numeric_limits<double>::infinity();
    }
    // Sum the two denominators first so that C(n,k) and C(n,n-k) round identically.
    return log_factorial(n) - (log_factorial(k) + log_factorial(n - k));
}

double binomial_pmf(int n, int k, double p) {
    if (k < 0 || k > n) {
        return 0.0;
    }
    if (p <= 0.0) {
        return k == 0 ? 1.0 : 0.0;
    }
    if (p >= 1.0) {
        return k == n ? 1.0 : 0.0;
    }
    return std::exp(log_binomial(n, k) + k * std::log(p) + (n - k) * std::log1p(-p));
}

double poisson_pmf(int n, double lambda) {
    if (n < 0) {
        return 0.0;
    }
    if (lambda <= 0.0) {
        return n == 0 ? 1.0 : 0.0;
    }
    return std::exp(n * std::log(lambda) - lambda - log_factorial(n));
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace backaction
