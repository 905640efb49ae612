#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "merit/table.hpp"

namespace merit {

struct BinStat {
    double lower;  // inclusive
    double upper;  // exclusive, except for the last bin
    std::optional<double> mean;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    std::size_t count = 0;
};

/// Mean of `value_col` per `bin_width`-wide bin of `bin_col`, with a normal
/// approximation interval mean +/- z * sd / sqrt(count). Rows with a null in
/// either column are skipped. Bins with fewer than two values have no
/// interval; empty bins have no mean.
std::vector<BinStat> bin_mean_ci(const MarketTable& table, std::string_view value_col,
                                 std::string_view bin_col, double bin_width,
                                 double confidence);

}  // namespace merit
