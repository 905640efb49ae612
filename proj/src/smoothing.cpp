#include <cmath>
#include <vector>

#include "merit/error.hpp"
#include "merit/local_dml.hpp"
#include "merit/table.hpp"

namespace merit {
namespace {

// Half-sample symmetric extension: ... c b a | a b c | c b a ...
std::size_t reflect(long long j, long long n) {
    const long long period = 2 * n;
    long long m = j % period;
    if (m < 0) m += period;
    return static_cast<std::size_t>(m < n ? m : period - 1 - m);
}

}  // namespace

std::vector<double> smooth_curve(std::span<const double> raw, double sigma) {
    if (!(sigma >= 0.0)) throw ArgumentError("smoothing sigma must be >= 0");
    std::vector<double> out(raw.begin(), raw.end());
    if (sigma == 0.0 || raw.empty()) return out;

    const auto radius = static_cast<long long>(4.0 * sigma + 0.5);
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (long long k = -radius; k <= radius; ++k) {
        const double w = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
        kernel[static_cast<std::size_t>(k + radius)] = w;
        total += w;
    }
    for (auto& w : kernel) w /= total;

    const auto n = static_cast<long long>(raw.size());
    for (long long i = 0; i < n; ++i) {
        double acc = 0.0, mass = 0.0;
        for (long long k = -radius; k <= radius; ++k) {
            const double v = raw[reflect(i + k, n)];
            if (is_null(v)) continue;
            const double w = kernel[static_cast<std::size_t>(k + radius)];
            acc += w * v;
            mass += w;
        }
        out[static_cast<std::size_t>(i)] = mass > 0.0 ? acc / mass : kNull;
    }
    return out;
}

double SmoothingRule::sigma_for(std::span<const double> raw) const {
    if (!(value >= 0.0)) throw ArgumentError("smoothing parameter must be >= 0");
    if (mode == SigmaMode::index) return value;
    // Population standard deviation of the finite estimates, read as a number
    // of window indices.
    std::vector<double> finite;
    for (double v : raw)
        if (!is_null(v)) finite.push_back(v);
    if (finite.size() < 2) return 0.0;
    double m = 0.0;
    for (double v : finite) m += v;
    m /= static_cast<double>(finite.size());
    double var = 0.0;
    for (double v : finite) var += (v - m) * (v - m);
    var /= static_cast<double>(finite.size());
    return value * std::sqrt(var);
}

}  // namespace merit
