#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "merit/error.hpp"
#include "merit/local_dml.hpp"
#include "merit/schema.hpp"
#include "merit/synth.hpp"
#include "support.hpp"

using namespace merit;

namespace {

DmlTask wind_task(LearnerSpec learner, std::uint64_t seed) {
    const auto map = ResidualizationMap::for_technology(Technology::wind);
    DmlTask task;
    task.outcome_col = std::string(col::apx_price);
    task.treatment_col = std::string(col::wind_forecast);
    task.confounder_cols = map.outcome_confounders;
    task.treatment_confounder_cols = map.treatment_confounders;
    task.learner_outcome = learner;
    task.learner_treatment = learner;
    task.seed = seed;
    task.treatment_scale = 1e-3;
    return task;
}

// Direct evaluation of the reflected, truncated, renormalized Gaussian filter.
std::vector<double> brute_smooth(const std::vector<double>& x, double sigma) {
    const int n = static_cast<int>(x.size());
    const int radius = static_cast<int>(4 * sigma + 0.5);
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        double num = 0, den = 0;
        for (int k = -radius; k <= radius; ++k) {
            int j = i + k;
            while (j < 0 || j >= n) j = j < 0 ? -j - 1 : 2 * n - j - 1;
            const double w = std::exp(-0.5 * k * k / (sigma * sigma));
            num += w * x[j];
            den += w;
        }
        out[i] = num / den;
    }
    return out;
}

MarketTable ranked_table(std::size_t n, double constant = kNull) {
    Column x(n);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 100);
    for (auto& v : x) v = is_null(constant) ? u(rng) : constant;
    std::vector<Timestamp> ts(n);
    for (std::size_t i = 0; i < n; ++i) ts[i] = static_cast<Timestamp>(i) * 1800;
    return MarketTable::from_columns(ts, {{"x", x}});
}

}  // namespace

TEST_CASE("window planning") {
    auto plan = plan_windows(ranked_table(25000), "x", 10000, 1000);
    REQUIRE(plan.windows.size() == 16);
    CHECK(plan.windows.back().start == 15000);
    for (std::size_t w = 0; w < plan.windows.size(); ++w) {
        CHECK(plan.windows[w].size() == 10000);
        CHECK(plan.rows(w).size() == 10000);
        if (w) {
            CHECK(plan.windows[w].start - plan.windows[w - 1].start == 1000);
            CHECK(plan.windows[w].center >= plan.windows[w - 1].center);
        }
    }
    // membership follows conditioning rank
    const auto t = ranked_table(25000);
    const auto x = t.column("x");
    auto rows = plan.rows(3);
    const auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(),
                                              [&](auto a, auto b) { return x[a] < x[b]; });
    CHECK(x[*lo] == x[plan.order[3000]]);
    CHECK(x[*hi] == x[plan.order[12999]]);

    CHECK(plan_windows(ranked_table(500), "x", 500, 10).windows.size() == 1);
    auto ragged = plan_windows(ranked_table(1050), "x", 500, 100);
    CHECK(ragged.windows.size() == 7);
    CHECK(ragged.windows.back().end == 1050);

    auto flat = plan_windows(ranked_table(300, 4.0), "x", 100, 50);
    CHECK_FALSE(flat.warnings.empty());
    for (const auto& w : flat.windows) CHECK(w.center == 4.0);

    CHECK_THROWS_AS(plan_windows(ranked_table(99), "x", 100, 10), InsufficientDataError);
    CHECK_THROWS_AS(plan_windows(ranked_table(200), "x", 100, 0), ArgumentError);
}

TEST_CASE("gaussian smoothing") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z(0, 1);
    std::vector<double> a(40), b(40);
    for (auto& v : a) v = z(rng);
    for (auto& v : b) v = z(rng);

    auto same = smooth_curve(std::vector<double>(20, 3.25), 2.0);
    for (double v : same) CHECK(std::abs(v - 3.25) < 1e-12);

    std::vector<double> impulse(21, 0.0);
    impulse[10] = 1.0;
    auto bell = smooth_curve(impulse, 1.0);
    double mass = 0;
    for (double v : bell) mass += v;
    CHECK(std::abs(mass - 1.0) < 1e-9);
    for (int k = 1; k <= 10; ++k) {
        CHECK(std::abs(bell[10 - k] - bell[10 + k]) < 1e-15);
        if (k <= 4)
            CHECK(bell[10 + k] < bell[10 + k - 1]);
        else
            CHECK(bell[10 + k] == 0.0);
    }

    std::vector<double> ramp(30);
    for (int i = 0; i < 30; ++i) ramp[i] = 0.5 * i - 3;
    auto sr = smooth_curve(ramp, 1.5);
    for (int i = 6; i < 24; ++i) CHECK(std::abs(sr[i] - ramp[i]) < 1e-9);

    auto ref = brute_smooth(a, 2.0);
    auto got = smooth_curve(a, 2.0);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(got[i] - ref[i]) < 1e-12);

    std::vector<double> mix(40);
    for (std::size_t i = 0; i < 40; ++i) mix[i] = 2.5 * a[i] - 0.75 * b[i];
    auto sm = smooth_curve(mix, 2.0), sa = smooth_curve(a, 2.0), sb = smooth_curve(b, 2.0);
    double m_raw = 0, m_smooth = 0;
    for (std::size_t i = 0; i < 40; ++i) {
        CHECK(std::abs(sm[i] - (2.5 * sa[i] - 0.75 * sb[i])) < 1e-9);
        m_raw += a[i] / 40;
        m_smooth += sa[i] / 40;
    }
    CHECK(std::abs(m_raw - m_smooth) < 1e-9);

    CHECK(smooth_curve(a, 0.0) == a);

    std::vector<double> holes = a;
    holes[5] = kNull;
    auto sh = smooth_curve(holes, 1.0);
    for (double v : sh) CHECK_FALSE(is_null(v));

    SmoothingRule rule{SigmaMode::sd_of_effects, 1.5};
    CHECK(rule.sigma_for(std::vector<double>{1, 3}) == doctest::Approx(1.5));
}

TEST_CASE("constant effect is recovered with intervals") {
    auto spec = ScenarioSpec::named("constant");
    spec.seed = 3;
    const auto table = generate(spec);
    const auto plan = plan_windows(table, conditioning_column(spec), 10000, 1000);
    CateOptions opts;
    opts.bootstrap = 10;
    opts.percentile_method = PercentileMethod::inverted_cdf;
    const auto curve = estimate_cate_curve(table, wind_task(LearnerSpec::ridge(1.0), 3),
                                           ResidualizationMap::for_technology(Technology::wind),
                                           plan, opts);
    REQUIRE(curve.size() == 21);
    std::size_t covered = 0;
    for (std::size_t w = 0; w < curve.size(); ++w) {
        CHECK(curve.failures[w].empty());
        CHECK(std::abs(curve.smoothed[w] + 1.5) <= 0.3);
        covered += curve.ci_low[w] <= -1.5 && -1.5 <= curve.ci_high[w];
        const auto& reps = curve.bootstrap[w];
        REQUIRE(reps.size() == 10);
        // at most ceil(0.1 B) - 1 replicate estimates fall strictly below the lower bound
        CHECK(std::count_if(reps.begin(), reps.end(), [&](double v) { return v < curve.ci_low[w]; }) <= 0);
        CHECK(curve.window_sizes[w] == 10000);
    }
    CHECK(covered >= 0.6 * curve.size());
}

TEST_CASE("unconfounded windows agree with simple OLS") {
    auto spec = ScenarioSpec::named("unconfounded");
    spec.n = 12000;
    spec.seed = 4;
    const auto table = generate(spec);
    const auto plan = plan_windows(table, conditioning_column(spec), 6000, 3000);
    CateOptions opts;
    opts.bootstrap = 20;
    const auto task = wind_task(LearnerSpec::ridge(1.0), 4);
    const auto curve = estimate_cate_curve(table, task, ResidualizationMap::for_technology(Technology::wind), plan, opts);
    const auto obs = observational_mean_curve(table, task.outcome_col, task.treatment_col, plan, 1e-3);
    const auto price = table.column(task.outcome_col);
    const auto wind = table.column(task.treatment_col);
    auto variance = [](const std::vector<double>& reps) {
        double m = 0, v = 0;
        for (double r : reps) m += r / reps.size();
        for (double r : reps) v += (r - m) * (r - m) / (reps.size() - 1);
        return v;
    };
    std::mt19937_64 rng(44);
    for (std::size_t w = 0; w < curve.size(); ++w) {
        // The window OLS slope carries its own sampling error, so both estimates are resampled.
        const auto rows = plan.rows(w);
        std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
        std::vector<double> ols_reps;
        for (int b = 0; b < 200; ++b) {
            double sy = 0, st = 0, stt = 0, sty = 0;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto r = rows[pick(rng)];
                const double t = wind[r] * 1e-3;
                sy += price[r], st += t, stt += t * t, sty += t * price[r];
            }
            const double m = static_cast<double>(rows.size());
            ols_reps.push_back((sty - st * sy / m) / (stt - st * st / m));
        }
        const double se = std::sqrt(variance(curve.bootstrap[w]) + variance(ols_reps));
        CHECK(std::abs(curve.raw[w] - obs[w]) < 2 * se);
        CHECK(std::abs(curve.raw[w] + 1.5) < 0.1);
    }
}

TEST_CASE("observational slope edge cases") {
    const std::size_t n = 400;
    Column p(n, 7.0), t(n), flat(n, 2.0), x(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::sin(double(i)), x[i] = double(i);
    auto table = testing::make_table({{"p", p}, {"t", t}, {"flat", flat}, {"x", x}});
    auto plan = plan_windows(table, "x", 200, 100);
    for (double s : observational_mean_curve(table, "p", "t", plan)) CHECK(std::abs(s) < 1e-12);
    for (double s : observational_mean_curve(table, "t", "flat", plan)) CHECK(is_null(s));
}

TEST_CASE("curves are deterministic across reruns and worker counts") {
    auto spec = ScenarioSpec::named("linear");
    spec.n = 3000;
    spec.seed = 5;
    const auto table = generate(spec);
    const auto plan = plan_windows(table, conditioning_column(spec), 1000, 500);
    const auto task = wind_task(LearnerSpec::boosted(20), 5);
    const auto map = ResidualizationMap::for_technology(Technology::wind);
    CateOptions one;
    one.bootstrap = 1;
    auto a = estimate_cate_curve(table, task, map, plan, one);
    auto b = estimate_cate_curve(table, task, map, plan, one);
    CHECK(a.raw == b.raw);
    CHECK(a.smoothed == b.smoothed);

    CateOptions par = one;
    par.bootstrap = 3;
    par.jobs = 3;
    auto c = estimate_cate_curve(table, task, map, plan, par);
    par.jobs = 1;
    auto d = estimate_cate_curve(table, task, map, plan, par);
    CHECK(c.bootstrap == d.bootstrap);

    par.fast = true;
    auto e = estimate_cate_curve(table, task, map, plan, par);
    par.jobs = 2;
    auto f = estimate_cate_curve(table, task, map, plan, par);
    CHECK(e.fast);
    CHECK(e.bootstrap == f.bootstrap);
}

TEST_CASE("failing windows become null entries") {
    auto spec = ScenarioSpec::named("constant");
    spec.n = 2000;
    auto table = generate(spec);
    table = table.with_column(std::string(col::wind_capacity), Column(table.n_rows(), 0.0))
                .with_column(std::string(col::wind_forecast), Column(table.n_rows(), 0.0));
    table = derive_features(table);
    const auto plan = plan_windows(table, conditioning_column(spec), 1000, 500);
    CateOptions opts;
    opts.bootstrap = 2;
    auto curve = penetration_treatment_variant(table, wind_task(LearnerSpec::ridge(1.0), 0),
                                               Technology::wind, plan, opts);
    REQUIRE(curve.size() == 3);
    for (std::size_t w = 0; w < curve.size(); ++w) {
        CHECK(is_null(curve.raw[w]));
        CHECK(curve.failures[w].find("no_variation") != std::string::npos);
    }
}

TEST_CASE("penetration-scale effect is recovered") {
    auto spec = ScenarioSpec::named("penetration");
    spec.seed = 6;
    const auto table = generate(spec);
    const auto plan = plan_windows(table, conditioning_column(spec), 10000, 10000);
    CateOptions opts;
    opts.bootstrap = 20;
    opts.fast = true;
    // Penetration is an exact function of its treatment confounders, so the residual
    // treatment is the learner's approximation error; ridge leaves the ratio's curvature.
    auto curve = penetration_treatment_variant(table, wind_task(LearnerSpec::ridge(1.0), 6),
                                               Technology::wind, plan, opts);
    for (std::size_t w = 0; w < curve.size(); ++w) CHECK(std::abs(curve.raw[w] + 2.0) <= 0.5);
    auto again = penetration_treatment_variant(table, wind_task(LearnerSpec::ridge(1.0), 6),
                                               Technology::wind, plan, opts);
    CHECK(again.raw == curve.raw);
}

TEST_CASE("rolling windows") {
    CHECK(rolling_window_count(105000, 35000, 17500) == 5);
    CHECK(rolling_window_count(35000, 35000, 17500) == 1);

    auto spec = ScenarioSpec::named("linear");
    spec.n = 4000;
    spec.seed = 8;
    const auto table = generate(spec);
    const auto task = wind_task(LearnerSpec::ridge(1.0), 8);
    const auto map = ResidualizationMap::for_technology(Technology::wind);
    RollingOptions opts;
    opts.conditioning_col = conditioning_column(spec);
    opts.span = 4000;
    opts.step = 1000;
    opts.window_size = 2000;
    opts.window_step = 500;
    opts.cate.bootstrap = 4;
    auto rolled = rolling_temporal_cate(table, task, map, opts);
    REQUIRE(rolled.size() == 1);
    auto global = estimate_cate_curve(table, task, map,
                                      plan_windows(table, opts.conditioning_col, 2000, 500), opts.cate);
    CHECK(rolled[0].curve.raw == global.raw);
    CHECK(rolled[0].rows == 4000);
}

TEST_CASE("stationary data give overlapping temporal curves") {
    auto spec = ScenarioSpec::named("constant");
    spec.n = 24000;
    spec.seed = 9;
    const auto table = generate(spec);
    RollingOptions opts;
    opts.conditioning_col = conditioning_column(spec);
    opts.span = 12000;
    opts.step = 6000;
    opts.window_size = 6000;
    opts.window_step = 1500;
    opts.cate.bootstrap = 20;
    auto rolled = rolling_temporal_cate(table, wind_task(LearnerSpec::ridge(1.0), 9),
                                        ResidualizationMap::for_technology(Technology::wind), opts);
    REQUIRE(rolled.size() == 3);
    std::size_t pairs = 0, overlapping = 0;
    for (std::size_t i = 0; i < rolled.size(); ++i)
        for (std::size_t j = i + 1; j < rolled.size(); ++j)
            for (std::size_t w = 0; w < rolled[i].curve.size(); ++w) {
                const auto& a = rolled[i].curve;
                const auto& b = rolled[j].curve;
                ++pairs;
                overlapping += a.ci_low[w] <= b.ci_high[w] && b.ci_low[w] <= a.ci_high[w];
            }
    CHECK(overlapping >= 0.8 * pairs);
    CHECK(rolled[0].end <= rolled[1].end);
}
