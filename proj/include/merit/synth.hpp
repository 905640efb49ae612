#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "merit/features.hpp"
#include "merit/schema.hpp"
#include "merit/table.hpp"

namespace merit {

/// Treatment-effect curve beta(x).
struct EffectFunction {
    enum class Kind { constant, linear, ushape };
    Kind kind = Kind::constant;
    double a = 0.0;   // constant: value; linear: slope; ushape: curvature
    double b = 0.0;   // linear: intercept; ushape: minimum value
    double x0 = 0.0;  // ushape: vertex

    static EffectFunction constant(double c);
    static EffectFunction linear(double slope, double intercept);
    static EffectFunction ushape(double curvature, double minimum, double vertex);

    double operator()(double x) const;
    std::string describe() const;
};

enum class NuisanceFamily { linear, smooth_nonlinear };

/// What the effect multiplies: wind production in GW, or predicted wind
/// penetration in percent.
enum class TreatmentTarget { production, penetration };

struct ScenarioSpec {
    std::size_t n = 30'000;
    EffectFunction effect = EffectFunction::constant(-1.5);
    double confounding_strength = 1.0;
    double noise_sd_outcome = 5.0;    // GBP/MWh
    double noise_sd_treatment = 1.0;  // GW (production) or MW-equivalent GW noise (penetration)
    NuisanceFamily nuisance = NuisanceFamily::linear;
    TreatmentTarget target = TreatmentTarget::production;
    std::uint64_t seed = 0;
    Location location;
    Timestamp start = 1522540800;  // 2018-04-01T00:00:00Z

    void validate() const;

    /// Named presets used by the CLI and the validation suites.
    static ScenarioSpec named(std::string_view name);
};

/// Column holding the conditioning variable x of synthetic tables: wind
/// production expected from capacity, hour and season at mean weather, over
/// expected load.
inline constexpr std::string_view kSynthConditioning = "expected_penetration";

/// Market-shaped table (same columns as ingested data, with derived features)
/// plus the conditioning column and the truth columns. With treatment t and
/// conditioning x: apx_price = beta(x) * t + f(a) + eps and t = g(a) + eta
/// hold exactly, where t is wind_forecast in GW or wind_penetration in
/// percent depending on the target. g includes an unobserved per-row weather
/// draw that confounding_strength blends with the hour and season drivers.
MarketTable generate(const ScenarioSpec& spec);

/// beta(x).
double true_cate(const ScenarioSpec& spec, double x);

/// Conditioning column the estimators should window on for this scenario.
std::string conditioning_column(const ScenarioSpec& spec);

}  // namespace merit
