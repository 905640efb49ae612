#include "merit/bins.hpp"

#include <algorithm>
#include <cmath>

#include "merit/error.hpp"
#include "merit/stats.hpp"

namespace merit {

std::vector<BinStat> bin_mean_ci(const MarketTable& table, std::string_view value_col,
                                 std::string_view bin_col, double bin_width,
                                 double confidence) {
    if (!(bin_width > 0.0)) throw ArgumentError("bin_width must be positive");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw ArgumentError("confidence must lie in (0, 1)");
    const auto values = table.column(value_col);
    const auto keys = table.column(bin_col);

    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        if (is_null(values[i]) || is_null(keys[i])) continue;
        lo = std::min(lo, keys[i]);
        hi = std::max(hi, keys[i]);
    }
    if (lo > hi) return {};

    const auto first = static_cast<long long>(std::floor(lo / bin_width));
    const auto last = static_cast<long long>(std::floor(hi / bin_width));
    const auto nbins = static_cast<std::size_t>(last - first + 1);
    std::vector<std::vector<double>> members(nbins);
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        if (is_null(values[i]) || is_null(keys[i])) continue;
        const auto b = static_cast<long long>(std::floor(keys[i] / bin_width)) - first;
        members[static_cast<std::size_t>(std::clamp<long long>(b, 0, nbins - 1))].push_back(
            values[i]);
    }

    const double z = normal_critical_value(confidence);
    std::vector<BinStat> out(nbins);
    for (std::size_t b = 0; b < nbins; ++b) {
        auto& s = out[b];
        s.lower = static_cast<double>(first + static_cast<long long>(b)) * bin_width;
        s.upper = s.lower + bin_width;
        s.count = members[b].size();
        if (s.count == 0) continue;
        s.mean = mean(members[b]);
        if (s.count < 2) continue;
        const double half = z * sample_sd(members[b]) / std::sqrt(static_cast<double>(s.count));
        s.ci_low = *s.mean - half;
        s.ci_high = *s.mean + half;
    }
    return out;
}

}  // namespace merit
