#include "merit/features.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "merit/schema.hpp"

namespace merit {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    return a >= 0 ? a / b : (a - b + 1) / b;
}

}  // namespace

CalendarFields calendar_fields(Timestamp ts) {
    using namespace std::chrono;
    const auto days = floor_div(ts, 86400);
    const sys_days day{std::chrono::days{days}};
    const year_month_day ymd{day};
    const weekday wd{day};
    const sys_days jan1{year_month_day{ymd.year(), January, std::chrono::day{1}}};
    CalendarFields f;
    f.year = int(ymd.year());
    f.month = static_cast<int>(unsigned(ymd.month()));
    f.day_of_week = static_cast<int>(wd.iso_encoding()) - 1;
    f.hour = static_cast<int>((ts - days * 86400) / 3600);
    f.day_of_year = static_cast<int>((day - jan1).count()) + 1;
    return f;
}

double daylight_hours(Timestamp ts, const Location& location) {
    const auto cal = calendar_fields(ts);
    const bool leap = (cal.year % 4 == 0 && cal.year % 100 != 0) || cal.year % 400 == 0;
    const double days_in_year = leap ? 366.0 : 365.0;
    // Fractional year at local solar noon, in radians.
    const double noon_utc = 12.0 - location.longitude_deg / 15.0;
    const double g = 2.0 * std::numbers::pi / days_in_year *
                     (cal.day_of_year - 1 + (noon_utc - 12.0) / 24.0);
    const double decl = 0.006918 - 0.399912 * std::cos(g) + 0.070257 * std::sin(g) -
                        0.006758 * std::cos(2 * g) + 0.000907 * std::sin(2 * g) -
                        0.002697 * std::cos(3 * g) + 0.00148 * std::sin(3 * g);
    const double lat = location.latitude_deg * kDeg;
    const double cos_ha = std::cos(90.833 * kDeg) / (std::cos(lat) * std::cos(decl)) -
                          std::tan(lat) * std::tan(decl);
    if (cos_ha >= 1.0) return 0.0;
    if (cos_ha <= -1.0) return 24.0;
    return 2.0 * std::acos(cos_ha) / kDeg / 15.0;
}

MarketTable derive_features(const MarketTable& table, const Location& location) {
    const auto n = table.n_rows();
    const auto ts = table.timestamps();
    Column year(n), month(n), dow(n), hour(n), daylight(n);
    std::unordered_map<std::int64_t, double> daylight_cache;
    for (std::size_t i = 0; i < n; ++i) {
        const auto cal = calendar_fields(ts[i]);
        year[i] = cal.year;
        month[i] = cal.month;
        dow[i] = cal.day_of_week;
        hour[i] = cal.hour;
        const auto day = floor_div(ts[i], 86400);
        auto it = daylight_cache.find(day);
        if (it == daylight_cache.end())
            it = daylight_cache.emplace(day, daylight_hours(day * 86400, location)).first;
        daylight[i] = it->second;
    }

    Provenance prov = table.provenance();
    const auto load = table.column(col::estimated_load);
    auto penetration = [&](std::string_view forecast_col, std::string_view out) {
        const auto fc = table.column(forecast_col);
        Column p(n);
        std::size_t nulls = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (is_null(fc[i]) || is_null(load[i]) || load[i] <= 0.0) {
                p[i] = kNull;
                ++nulls;
            } else {
                p[i] = fc[i] / load[i] * 100.0;
            }
        }
        if (nulls) prov.null_cells[std::string(out)] = nulls;
        return p;
    };
    Column wind = penetration(col::wind_forecast, col::wind_penetration);
    Column solar = penetration(col::solar_forecast, col::solar_penetration);

    return table.with_column(std::string(col::year), std::move(year))
        .with_column(std::string(col::month), std::move(month))
        .with_column(std::string(col::day_of_week), std::move(dow))
        .with_column(std::string(col::hour), std::move(hour))
        .with_column(std::string(col::daylight_hours), std::move(daylight))
        .with_column(std::string(col::wind_penetration), std::move(wind))
        .with_column(std::string(col::solar_penetration), std::move(solar))
        .with_provenance(std::move(prov));
}

}  // namespace merit
