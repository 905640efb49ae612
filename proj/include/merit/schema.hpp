#pragma once

#include <array>
#include <string_view>

// Canonical column names for half-hourly market records and their derived
// features.
namespace merit::col {

inline constexpr std::string_view timestamp = "timestamp";
inline constexpr std::string_view apx_price = "apx_price";
inline constexpr std::string_view nordpool_price = "nordpool_price";
inline constexpr std::string_view intraday_price = "intraday_price";
inline constexpr std::string_view actual_load = "actual_load";
inline constexpr std::string_view estimated_load = "estimated_load";
inline constexpr std::string_view gas_price = "gas_price";
inline constexpr std::string_view carbon_price = "carbon_price";
inline constexpr std::string_view wind_capacity = "wind_capacity";
inline constexpr std::string_view wind_forecast = "wind_forecast";
inline constexpr std::string_view solar_capacity = "solar_capacity";
inline constexpr std::string_view solar_forecast = "solar_forecast";

inline constexpr std::string_view year = "year";
inline constexpr std::string_view month = "month";
inline constexpr std::string_view day_of_week = "day_of_week";
inline constexpr std::string_view hour = "hour";
inline constexpr std::string_view daylight_hours = "daylight_hours";
inline constexpr std::string_view wind_penetration = "wind_penetration";
inline constexpr std::string_view solar_penetration = "solar_penetration";

/// Raw numeric fields of a market record, in file order.
inline constexpr std::array<std::string_view, 11> raw_numeric = {
    apx_price,     nordpool_price, intraday_price, actual_load,
    estimated_load, gas_price,     carbon_price,   wind_capacity,
    wind_forecast, solar_capacity, solar_forecast};

}  // namespace merit::col

namespace merit {

/// Hidden ground-truth columns of synthetic tables; never valid as estimator
/// inputs.
inline constexpr std::array<std::string_view, 3> kTruthColumns = {"true_beta_at_x", "f_a",
                                                                  "g_a"};

inline bool is_truth_column(std::string_view name) {
    for (auto t : kTruthColumns)
        if (t == name) return true;
    return false;
}

}  // namespace merit
