#pragma once

#include "merit/table.hpp"

namespace merit {

/// Geographic reference point for daylight computation. Defaults to London.
struct Location {
    double latitude_deg = 51.5074;
    double longitude_deg = -0.1278;
};

struct CalendarFields {
    int year;
    int month;        // 1-12
    int day_of_week;  // Monday = 0
    int hour;         // 0-23
    int day_of_year;  // 1-366
};

CalendarFields calendar_fields(Timestamp ts);

/// Hours between sunrise and sunset on the UTC calendar day containing `ts`,
/// using the NOAA solar-position approximation and the standard 0.833 degree
/// refraction-corrected horizon. Returns 0 or 24 in polar night or day.
double daylight_hours(Timestamp ts, const Location& location);

/// Appends year, month, day_of_week, hour, daylight_hours, wind_penetration and
/// solar_penetration. Penetration is null where estimated_load <= 0 or an
/// input is null; such rows are counted in the provenance.
MarketTable derive_features(const MarketTable& table, const Location& location = {});

}  // namespace merit
