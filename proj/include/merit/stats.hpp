#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace merit {

double mean(std::span<const double> xs);

/// Sample standard deviation (n - 1 denominator).
double sample_sd(std::span<const double> xs);

enum class PercentileMethod {
    linear,        // interpolate between order statistics at p * (n - 1)
    inverted_cdf,  // smallest x with empirical CDF >= p
};

/// `p` in [0, 1]. The input need not be sorted.
double percentile(std::span<const double> xs, double p,
                  PercentileMethod method = PercentileMethod::linear);

/// Two-sided standard normal critical value for the given coverage.
double normal_critical_value(double confidence);

/// Deterministic seed derivation; distinct (seed, a, b) give independent
/// streams for any scheduling of the work.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Uniform integer in [0, bound) by rejection sampling; unlike
/// std::uniform_int_distribution the sequence is the same on every standard
/// library.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

}  // namespace merit
