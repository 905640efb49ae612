#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "merit/bins.hpp"
#include "merit/csv.hpp"
#include "merit/error.hpp"
#include "merit/features.hpp"
#include "merit/schema.hpp"
#include "support.hpp"

using namespace merit;

namespace {

const char* kHeader =
    "timestamp,apx_price,estimated_load,gas_price,carbon_price,wind_capacity,wind_forecast,"
    "solar_capacity,solar_forecast\n";

std::string row(const std::string& ts, const std::string& price, double wind_fc = 5000) {
    return ts + "," + price + ",25000,40,60,20000," + std::to_string(wind_fc) + ",9000,1000\n";
}

// Sunrise-equation day length with Spencer's Fourier series for the solar
// declination, independent of the NOAA series used by the library.
double spencer_daylight(int day_of_year, double latitude_deg) {
    constexpr double deg = std::numbers::pi / 180.0;
    const double g = 2.0 * std::numbers::pi / 365.0 * (day_of_year - 1);
    const double decl = 0.006918 - 0.399912 * std::cos(g) + 0.070257 * std::sin(g) -
                        0.006758 * std::cos(2 * g) + 0.000907 * std::sin(2 * g) -
                        0.002697 * std::cos(3 * g) + 0.00148 * std::sin(3 * g);
    const double phi = latitude_deg * deg;
    const double c = (std::sin(-0.833 * deg) - std::sin(phi) * std::sin(decl)) /
                     (std::cos(phi) * std::cos(decl));
    return 2.0 * std::acos(std::clamp(c, -1.0, 1.0)) / deg / 15.0;
}

Timestamp at(const char* iso) { return *parse_timestamp(iso); }

}  // namespace

TEST_CASE("ingest excludes unparsable rows and counts them") {
    auto dir = testing::scratch_dir("ingest");
    std::string text = kHeader;
    text += row("2020-01-01T00:00:00Z", "50");
    text += row("2020-01-01T00:30:00Z", "abc");
    text += row("2020-01-01T01:00:00Z", "52");
    text += row("2020-01-01T01:30:00Z", "53");
    testing::write_text(dir / "m.csv", text);

    auto t = ingest_csv(dir / "m.csv", CsvSchema::market_default());
    CHECK(t.n_rows() == 3);
    CHECK(t.provenance().rows_read == 4);
    CHECK(t.provenance().excluded_total() == 1);
    CHECK(t.provenance().excluded.at("parse_error:apx_price") == 1);
    CHECK(t.column("apx_price")[1] == 52.0);
    // the gap left by the dropped row is reported, not hidden
    CHECK(t.provenance().violations.at("spacing_not_30min") == 1);
}

TEST_CASE("ingest tallies every exclusion reason and null token") {
    auto dir = testing::scratch_dir("reasons");
    std::string text = "\xEF\xBB\xBF";
    text += kHeader;
    text += row("2020-01-01T00:00:00Z", "50");
    text += row("2020-01-01T00:30:00Z", "NA");
    text += row("not a time", "50");
    text += row("2020-01-01T00:30:00Z", "51");  // repeats the previous timestamp
    text += "2020-01-01T01:00:00Z,1,2\n";
    text += row("2020-01-01 01:30", "\"55\"");
    testing::write_text(dir / "m.csv", text);

    auto t = ingest_csv(dir / "m.csv", CsvSchema::market_default());
    const auto& p = t.provenance();
    CHECK(t.n_rows() == 3);
    CHECK(p.excluded.at("bad_timestamp") == 1);
    CHECK(p.excluded.at("non_increasing_timestamp") == 1);
    CHECK(p.excluded.at("field_count") == 1);
    CHECK(p.null_cells.at("apx_price") == 1);
    CHECK(is_null(t.column("apx_price")[1]));
    CHECK(t.column("apx_price")[2] == 55.0);
    CHECK(p.rows_read == p.rows_parsed + p.excluded_total());
}

TEST_CASE("schema remapping yields the canonical table") {
    auto dir = testing::scratch_dir("rename");
    std::string canonical = kHeader;
    std::string renamed =
        "time,APX,load_est,gas,carbon,wcap,wfc,scap,sfc\n";
    std::string body = row("2020-01-01T00:00:00Z", "50") + row("2020-01-01T00:30:00Z", "51");
    testing::write_text(dir / "a.csv", canonical + body);
    testing::write_text(dir / "b.csv", renamed + body);

    auto schema = CsvSchema::market_default();
    schema.rename = {{"timestamp", "time"},          {"apx_price", "APX"},
                     {"estimated_load", "load_est"}, {"gas_price", "gas"},
                     {"carbon_price", "carbon"},     {"wind_capacity", "wcap"},
                     {"wind_forecast", "wfc"},       {"solar_capacity", "scap"},
                     {"solar_forecast", "sfc"}};
    auto a = ingest_csv(dir / "a.csv", CsvSchema::market_default());
    auto b = ingest_csv(dir / "b.csv", schema);
    REQUIRE(a.column_names() == b.column_names());
    for (const auto& name : a.column_names()) {
        auto x = a.column(name), y = b.column(name);
        CHECK(std::equal(x.begin(), x.end(), y.begin()));
    }
}

TEST_CASE("ingest errors") {
    auto dir = testing::scratch_dir("errors");
    testing::write_text(dir / "missing.csv", "timestamp,apx_price\n2020-01-01T00:00Z,1\n");
    CHECK_THROWS_AS(ingest_csv(dir / "missing.csv", CsvSchema::market_default()), SchemaError);

    testing::write_text(dir / "empty.csv", std::string(kHeader) + row("garbage", "1"));
    CHECK_THROWS_AS(ingest_csv(dir / "empty.csv", CsvSchema::market_default()), EmptyDataError);

    CHECK_THROWS_AS(ingest_csv(dir / "nope.csv", CsvSchema::market_default()), IoError);
}

TEST_CASE("forecast invariants are reported") {
    auto dir = testing::scratch_dir("violations");
    std::string text = kHeader;
    text += row("2020-01-01T00:00:00Z", "50", 25000);  // above the 20000 MW capacity
    text += row("2020-01-01T00:30:00Z", "50", -5);
    testing::write_text(dir / "m.csv", text);
    auto t = ingest_csv(dir / "m.csv", CsvSchema::market_default());
    CHECK(t.n_rows() == 2);
    CHECK(t.provenance().violations.at("wind_forecast_above_capacity") == 1);
    CHECK(t.provenance().violations.at("negative_wind_forecast") == 1);
}

TEST_CASE("extra columns travel with the table") {
    auto dir = testing::scratch_dir("extra");
    std::string text = "timestamp,apx_price,estimated_load,gas_price,carbon_price,wind_capacity,"
                       "wind_forecast,solar_capacity,solar_forecast,my_extra\n"
                       "2020-01-01T00:00:00Z,50,25000,40,60,20000,5000,9000,1000,7.5\n";
    testing::write_text(dir / "m.csv", text);
    auto t = ingest_csv(dir / "m.csv", CsvSchema::market_default());
    CHECK(t.column("my_extra")[0] == 7.5);
}

TEST_CASE("write then ingest round-trips bit for bit") {
    auto dir = testing::scratch_dir("roundtrip");
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::string text = kHeader;
    for (int i = 0; i < 200; ++i) {
        const Timestamp ts = 1577836800 + i * 1800;
        text += format_timestamp(ts) + "," + format_double(u(rng) * 100 - 20) + "," +
                format_double(20000 + u(rng) * 1e4) + ",40.125,60," + "20000," +
                format_double(u(rng) * 2e4) + ",9000," + (i % 7 ? format_double(u(rng)) : "") + "\n";
    }
    testing::write_text(dir / "a.csv", text);
    auto a = derive_features(ingest_csv(dir / "a.csv", CsvSchema::market_default()));
    write_csv(a, dir / "b.csv");
    auto b = ingest_csv(dir / "b.csv", CsvSchema::market_default());
    REQUIRE(a.n_rows() == b.n_rows());
    auto ta = a.timestamps(), tb = b.timestamps();
    CHECK(std::equal(ta.begin(), ta.end(), tb.begin()));
    for (const auto& name : a.column_names()) {
        REQUIRE(b.has_column(name));
        auto x = a.column(name), y = b.column(name);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (is_null(x[i]))
                CHECK(is_null(y[i]));
            else
                CHECK(x[i] == y[i]);
        }
    }
}

TEST_CASE("timestamp parsing") {
    CHECK(at("1970-01-01T00:00:00Z") == 0);
    CHECK(at("2018-04-01T00:30:00Z") == 1522542600);
    CHECK(at("2018-04-01 00:30") == 1522542600);
    CHECK(at("2018-04-01T01:30:00+01:00") == 1522542600);
    CHECK(at("2018-04-01T00:30:00.000Z") == 1522542600);
    CHECK_FALSE(parse_timestamp("2018-13-01T00:00Z").has_value());
    CHECK_FALSE(parse_timestamp("yesterday").has_value());
    CHECK(format_timestamp(1522542600) == "2018-04-01T00:30:00Z");
}

TEST_CASE("calendar fields") {
    auto monday = calendar_fields(at("2024-01-01T13:30:00Z"));
    CHECK(monday.day_of_week == 0);
    CHECK(monday.hour == 13);
    CHECK(monday.month == 1);
    CHECK(monday.year == 2024);
    CHECK(calendar_fields(at("2018-04-01T00:00:00Z")).day_of_week == 6);
    CHECK(calendar_fields(at("2020-12-31T23:59:00Z")).day_of_year == 366);
}

TEST_CASE("daylight hours") {
    const Location london;
    CHECK(std::abs(daylight_hours(at("2023-03-20T12:00:00Z"), london) - 12.0) <= 0.2);
    CHECK(std::abs(daylight_hours(at("2023-06-21T12:00:00Z"), london) - 16.6) <= 0.2);

    // independent sunrise-equation oracle over a whole year
    double worst = 0.0;
    for (int d = 0; d < 365; ++d) {
        const Timestamp ts = at("2023-01-01T12:00:00Z") + d * 86400;
        worst = std::max(worst, std::abs(daylight_hours(ts, london) -
                                         spencer_daylight(d + 1, london.latitude_deg)));
    }
    CHECK(worst < 0.2);

    // monotone from winter to summer solstice
    double prev = 0.0;
    for (Timestamp ts = at("2023-12-22T12:00:00Z"); ts <= at("2024-06-20T12:00:00Z"); ts += 86400) {
        const double h = daylight_hours(ts, london);
        CHECK(h >= prev - 1e-9);
        prev = h;
    }

    CHECK(daylight_hours(at("2023-06-21T12:00:00Z"), Location{80.0, 0.0}) == 24.0);
    CHECK(daylight_hours(at("2023-12-21T12:00:00Z"), Location{80.0, 0.0}) == 0.0);
}

TEST_CASE("derived penetration") {
    auto t = MarketTable::from_columns(
        {0, 1800, 3600},
        {{"estimated_load", {25000, 0, 20000}},
         {"wind_forecast", {5000, 100, 3333}},
         {"solar_forecast", {1000, 10, 0}}});
    auto d = derive_features(t);
    auto wp = d.column(col::wind_penetration);
    CHECK(wp[0] == 20.0);
    CHECK(is_null(wp[1]));
    CHECK(std::abs(wp[2] - 3333.0 / 20000.0 * 100.0) <= 1e-9 * wp[2]);
    CHECK(d.column(col::solar_penetration)[0] == 4.0);
    CHECK(d.provenance().null_cells.at(std::string(col::wind_penetration)) == 1);
    for (auto name : {col::year, col::month, col::day_of_week, col::hour, col::daylight_hours})
        CHECK(d.has_column(name));
}

TEST_CASE("bin means and intervals") {
    SUBCASE("zero variance") {
        auto t = testing::make_table({{"v", {10, 10, 10}}, {"b", {1, 2, 3}}});
        auto bins = bin_mean_ci(t, "v", "b", 10.0, 0.95);
        REQUIRE(bins.size() == 1);
        CHECK(*bins[0].mean == 10.0);
        CHECK(*bins[0].ci_low == 10.0);
        CHECK(*bins[0].ci_high == 10.0);
        CHECK(bins[0].count == 3);
    }
    SUBCASE("arithmetic mean, single-value bins have no interval, empty bins are kept") {
        auto t = testing::make_table({{"v", {0, 10, 7}}, {"b", {1, 2, 35}}});
        auto bins = bin_mean_ci(t, "v", "b", 10.0, 0.95);
        REQUIRE(bins.size() == 4);
        CHECK(*bins[0].mean == 5.0);
        CHECK(bins[1].count == 0);
        CHECK_FALSE(bins[1].mean.has_value());
        CHECK(*bins[3].mean == 7.0);
        CHECK_FALSE(bins[3].ci_low.has_value());
        CHECK(bins[3].lower == 30.0);
        CHECK(bins[3].upper == 40.0);
    }
    SUBCASE("half-width matches z * sigma / sqrt(n)") {
        std::mt19937_64 rng(11);
        std::normal_distribution<double> price(50.0, 5.0);
        Column v(10000), b(10000, 5.0);
        for (auto& x : v) x = price(rng);
        auto bins = bin_mean_ci(testing::make_table({{"v", v}, {"b", b}}), "v", "b", 10.0, 0.95);
        REQUIRE(bins.size() == 1);
        const double half = (*bins[0].ci_high - *bins[0].ci_low) / 2.0;
        CHECK(std::abs(half - 0.098) <= 0.0098);
    }
    SUBCASE("one all-encompassing bin equals the global normal interval") {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(0, 1);
        Column v(500), b(500);
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = 30 + 40 * u(rng);
            b[i] = 100 * u(rng) * 0.999;
        }
        auto bins = bin_mean_ci(testing::make_table({{"v", v}, {"b", b}}), "v", "b", 100.0, 0.9);
        REQUIRE(bins.size() == 1);
        double m = 0, ss = 0;
        for (double x : v) m += x;
        m /= v.size();
        for (double x : v) ss += (x - m) * (x - m);
        const double half = 1.6448536269514722 * std::sqrt(ss / (v.size() - 1)) / std::sqrt(500.0);
        CHECK(*bins[0].mean == doctest::Approx(m).epsilon(1e-12));
        CHECK(*bins[0].ci_low == doctest::Approx(m - half).epsilon(1e-12));
        CHECK(*bins[0].ci_high == doctest::Approx(m + half).epsilon(1e-12));
    }
    SUBCASE("argument checks") {
        auto t = testing::make_table({{"v", {1}}, {"b", {1}}});
        CHECK_THROWS_AS(bin_mean_ci(t, "v", "b", 0.0, 0.95), ArgumentError);
        CHECK_THROWS_AS(bin_mean_ci(t, "v", "b", 10.0, 1.0), ArgumentError);
    }
}

TEST_CASE("tables are immutable and checked") {
    auto t = testing::make_table({{"a", {1, 2, 3}}});
    auto u = t.with_column("b", {4, 5, 6});
    CHECK_FALSE(t.has_column("b"));
    CHECK(u.column("a").data() == t.column("a").data());
    CHECK_THROWS_AS(t.column("missing"), SchemaError);
    CHECK_THROWS(t.with_column("c", {1}));
    std::vector<std::string> cols{"a", "b"};
    auto v = u.with_column("b", {4, kNull, 6});
    CHECK(v.complete_rows(cols) == std::vector<std::size_t>{0, 2});
    std::vector<std::size_t> rows{2, 0};
    CHECK(v.select_rows(rows).column("a")[0] == 3.0);
}
