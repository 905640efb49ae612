#include "merit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "merit/error.hpp"

namespace merit {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw ArgumentError("mean of empty sequence");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
    if (xs.size() < 2) throw ArgumentError("standard deviation needs at least two values");
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double percentile(std::span<const double> xs, double p, PercentileMethod method) {
    if (xs.empty()) throw ArgumentError("percentile of empty sequence");
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("percentile level must lie in [0, 1]");
    std::vector<double> v(xs.begin(), xs.end());
    const auto n = v.size();
    if (method == PercentileMethod::inverted_cdf) {
        auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
        k = std::clamp<std::size_t>(k, 1, n) - 1;
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
        return v[k];
    }
    const double pos = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, n - 1);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
    const double a = v[lo];
    if (hi == lo) return a;
    const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
    return a + (pos - static_cast<double>(lo)) * (b - a);
}

double normal_critical_value(double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0))
        throw ArgumentError("confidence must lie in (0, 1)");
    const boost::math::normal standard;
    return boost::math::quantile(standard, 0.5 + confidence / 2.0);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer applied to a running combination.
    auto mix = [](std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(seed) ^ a) ^ (b * 0xD6E8FEB86659FD93ULL));
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound == 0) throw ArgumentError("uniform_below needs a positive bound");
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % bound;
    std::uint64_t r;
    do r = rng(); while (r >= limit);
    return r % bound;
}

}  // namespace merit
