#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/rational.hpp>

namespace ergomix {

using Rational = boost::rational<std::int64_t>;

// Summation in pairwise order: reproducible and keeps the 1e-12 error
// budgets realistic at the state counts we use.
inline double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 32) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& xs) {
    return pairwise_sum(std::span<const double>(xs));
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Per-trial generator of a splittable counter scheme: results do not depend
// on how trials are distributed over workers.
inline std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial_index) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(trial_index + 1)));
}

// Uniform double in [0,1) from the top 53 bits; avoids std::*_distribution
// so that streams are identical across standard library implementations.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Inverse-CDF draw on a fixed cumulative table.
inline std::size_t sample_index(const std::vector<double>& cdf, double u) {
    std::size_t lo = 0, hi = cdf.size();
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (cdf[mid] <= u)
            lo = mid + 1;
        else
            hi = mid;
    }
    return lo < cdf.size() ? lo : cdf.size() - 1;
}

inline std::int64_t gcd64(std::int64_t a, std::int64_t b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        std::int64_t t = a % b;
        a = b;
        b = t;
    }
    return a;
}

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// An experiment-level invariant failed (a bound was violated, a certificate
// did not re-check, ...). The CLI maps this to exit status 2.
class CheckFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace ergomix
