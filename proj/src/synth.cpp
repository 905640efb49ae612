#include "merit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "merit/error.hpp"

namespace merit {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr Timestamp kDay = 86'400;
constexpr Timestamp kHalfHour = 1'800;

struct DaylightRange {
    double min = 0.0;
    double max = 0.0;
};

DaylightRange daylight_range(const Location& loc, Timestamp start) {
    DaylightRange r{24.0, 0.0};
    const Timestamp day0 = start - (start % kDay);
    for (int d = 0; d < 366; ++d) {
        const double h = daylight_hours(day0 + d * kDay + kDay / 2, loc);
        r.min = std::min(r.min, h);
        r.max = std::max(r.max, h);
    }
    return r;
}

// Seasonal index: 1 at the shortest day, 0 at the longest.
double season(double daylight, const DaylightRange& r) {
    if (r.max - r.min < 1e-9) return 0.5;
    return std::clamp((r.max - daylight) / (r.max - r.min), 0.0, 1.0);
}

}  // namespace

EffectFunction EffectFunction::constant(double c) {
    return {Kind::constant, c, 0.0, 0.0};
}

EffectFunction EffectFunction::linear(double slope, double intercept) {
    return {Kind::linear, slope, intercept, 0.0};
}

EffectFunction EffectFunction::ushape(double curvature, double minimum, double vertex) {
    return {Kind::ushape, curvature, minimum, vertex};
}

double EffectFunction::operator()(double x) const {
    switch (kind) {
        case Kind::constant: return a;
        case Kind::linear: return a * x + b;
        case Kind::ushape: return a * (x - x0) * (x - x0) + b;
    }
    return a;
}

std::string EffectFunction::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::constant: os << "constant(" << a << ")"; break;
        case Kind::linear: os << "linear(slope=" << a << ", intercept=" << b << ")"; break;
        case Kind::ushape:
            os << "ushape(curvature=" << a << ", minimum=" << b << ", vertex=" << x0 << ")";
            break;
    }
    return os.str();
}

void ScenarioSpec::validate() const {
    if (n < 1) throw ArgumentError("scenario needs at least one row");
    if (!(confounding_strength >= 0.0) || !std::isfinite(confounding_strength))
        throw ArgumentError("confounding_strength must be finite and >= 0");
    if (!(noise_sd_outcome > 0.0) || !std::isfinite(noise_sd_outcome))
        throw ArgumentError("noise_sd_outcome must be > 0");
    if (!(noise_sd_treatment > 0.0) || !std::isfinite(noise_sd_treatment))
        throw ArgumentError("noise_sd_treatment must be > 0");
    if (!std::isfinite(effect.a) || !std::isfinite(effect.b) || !std::isfinite(effect.x0))
        throw ArgumentError("effect parameters must be finite");
}

ScenarioSpec ScenarioSpec::named(std::string_view name) {
    ScenarioSpec s;
    if (name == "constant") {
        s.effect = EffectFunction::constant(-1.5);
    } else if (name == "linear-ate") {
        s.n = 20'000;
        s.effect = EffectFunction::constant(2.0);
    } else if (name == "ushape") {
        s.effect = EffectFunction::ushape(10.0, -1.0, 0.4);
        s.noise_sd_outcome = 8.0;
        s.noise_sd_treatment = 1.5;
    } else if (name == "linear") {
        s.effect = EffectFunction::linear(-2.0, -0.5);
    } else if (name == "unconfounded") {
        s.effect = EffectFunction::constant(-1.5);
        s.confounding_strength = 0.0;
    } else if (name == "nonlinear") {
        s.effect = EffectFunction::ushape(10.0, -1.0, 0.4);
        s.noise_sd_outcome = 8.0;
        s.noise_sd_treatment = 1.5;
        s.nuisance = NuisanceFamily::smooth_nonlinear;
    } else if (name == "penetration") {
        s.effect = EffectFunction::constant(-2.0);
        s.target = TreatmentTarget::penetration;
    } else {
        throw ArgumentError("unknown scenario '" + std::string(name) +
                            "'; expected constant, linear-ate, ushape, linear, unconfounded, "
                            "nonlinear or penetration");
    }
    return s;
}

double true_cate(const ScenarioSpec& spec, double x) { return spec.effect(x); }

std::string conditioning_column(const ScenarioSpec&) { return std::string(kSynthConditioning); }

MarketTable generate(const ScenarioSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n;
    const double k = spec.confounding_strength;
    const bool nonlinear = spec.nuisance == NuisanceFamily::smooth_nonlinear;
    const auto range = daylight_range(spec.location, spec.start);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Timestamp> ts(n);
    Column apx(n), load(n), actual(n), gas(n), carbon(n), wcap(n), wfc(n), scap(n), sfc(n);
    Column x_col(n), beta_col(n), f_col(n), g_col(n);

    // Confounding mixes the seasonal, diurnal and capacity drivers into production.
    const double mix = k / (1.0 + k);
    double cached_day = -1.0, cached_daylight = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ts[i] = spec.start + static_cast<Timestamp>(i) * kHalfHour;
        const auto cal = calendar_fields(ts[i]);
        const double day = std::floor(static_cast<double>(ts[i]) / kDay);
        if (day != cached_day) {
            cached_day = day;
            cached_daylight = daylight_hours(ts[i], spec.location);
        }
        const double s = season(cached_daylight, range);
        const double hn = cal.hour / 23.0;
        const double frac = static_cast<double>(i) / static_cast<double>(n);

        wcap[i] = 30'000.0 + 10'000.0 * frac;
        scap[i] = 8'000.0 + 5'000.0 * frac;
        const double sun = std::max(0.0, std::sin(kPi * (cal.hour - 6.0) / 12.0));

        const double load_noise = normal(rng);
        const double actual_noise = normal(rng);
        const double u_gas = unit(rng);
        const double u_carbon = unit(rng);
        const double u_solar = unit(rng);
        const double eta = normal(rng) * spec.noise_sd_treatment;
        const double eps = normal(rng) * spec.noise_sd_outcome;
        // Weather is drawn per row: a time-correlated series would be learnable
        // from the capacity trend, which only the treatment model sees.
        const double wind = unit(rng);

        const double expected_load = 28'000.0 + 8'000.0 * s + 4'000.0 * std::sin(kPi * hn);
        load[i] = expected_load + 1'500.0 * load_noise;
        actual[i] = load[i] + 800.0 * actual_noise;
        gas[i] = 20.0 + 40.0 * u_gas;
        carbon[i] = 20.0 + 60.0 * u_carbon;
        sfc[i] = scap[i] * sun * (0.3 + 0.5 * (1.0 - s)) * (0.5 + 0.5 * u_solar);

        // Expected wind production (GW) from capacity, weather, hour and season.
        const double cap_gw = 35.0 + mix * (wcap[i] / 1000.0 - 35.0);
        const double driven = nonlinear ? 0.35 * std::pow(std::sin(kPi * hn), 2) + 0.4 * s * s
                                        : 0.30 * hn + 0.35 * s;
        const double shape = 0.10 + (1.0 - mix) * 0.65 * wind + mix * driven;
        const double g = cap_gw * shape;
        // The conditioning value uses mean weather: if the unexplained part of the
        // treatment also moved x, window slopes would pick up x * beta'(x). It uses
        // the load forecast without noise, since conditioning on realized load would
        // tie g to load inside a window and load is not a treatment confounder.
        const double expected_g = cap_gw * (0.10 + (1.0 - mix) * 0.325 + mix * driven);
        const double planning_load = 32'000.0 + mix * (expected_load - 32'000.0);
        const double x = 1000.0 * expected_g / planning_load;

        double f = 50.0 + 0.9 * (gas[i] - 40.0) + 0.25 * (carbon[i] - 50.0) +
                   1.5 * (load[i] / 1000.0 - 32.0) - 0.4 * sfc[i] / 1000.0 + 25.0 * k * s;
        if (nonlinear)
            f += 6.0 * std::sin(2.0 * kPi * hn) + 0.02 * std::pow(gas[i] - 40.0, 2) +
                 15.0 * k * s * s;

        const double beta = spec.effect(x);
        double t, g_a;
        if (spec.target == TreatmentTarget::production) {
            g_a = g;
            t = g + eta;
            wfc[i] = 1000.0 * t;
        } else {
            // Penetration in percent of estimated load.
            g_a = 100.0 * 1000.0 * g / load[i];
            t = 100.0 * 1000.0 * (g + eta) / load[i];
            wfc[i] = 1000.0 * (g + eta);
        }
        apx[i] = beta * t + f + eps;
        x_col[i] = x;
        beta_col[i] = beta;
        f_col[i] = f;
        g_col[i] = g_a;
    }

    Provenance prov;
    prov.source = "synthetic";
    prov.rows_read = n;
    prov.rows_parsed = n;

    std::vector<std::pair<std::string, Column>> cols;
    cols.emplace_back(std::string(col::apx_price), apx);
    cols.emplace_back(std::string(col::nordpool_price), apx);
    cols.emplace_back(std::string(col::intraday_price), std::move(apx));
    cols.emplace_back(std::string(col::actual_load), std::move(actual));
    cols.emplace_back(std::string(col::estimated_load), std::move(load));
    cols.emplace_back(std::string(col::gas_price), std::move(gas));
    cols.emplace_back(std::string(col::carbon_price), std::move(carbon));
    cols.emplace_back(std::string(col::wind_capacity), std::move(wcap));
    cols.emplace_back(std::string(col::wind_forecast), std::move(wfc));
    cols.emplace_back(std::string(col::solar_capacity), std::move(scap));
    cols.emplace_back(std::string(col::solar_forecast), std::move(sfc));
    auto table = MarketTable::from_columns(std::move(ts), std::move(cols), std::move(prov));
    table = derive_features(table, spec.location);
    table = table.with_column(std::string(kSynthConditioning), std::move(x_col));
    table = table.with_column(std::string(kTruthColumns[0]), std::move(beta_col));
    table = table.with_column(std::string(kTruthColumns[1]), std::move(f_col));
    table = table.with_column(std::string(kTruthColumns[2]), std::move(g_col));
    return table;
}

}  // namespace merit
