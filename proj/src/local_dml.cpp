#include "merit/local_dml.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "merit/error.hpp"
#include "merit/parallel.hpp"
#include "merit/schema.hpp"

namespace merit {
namespace {

std::string tech_name(Technology t) { return t == Technology::wind ? "wind" : "solar"; }

// Folds over the positions of a resample, dealt by source row so that every
// copy of a row lands in the same fold; otherwise a duplicate in the training
// folds would leak the held-out row into its own nuisance prediction.
Folds grouped_folds(std::span<const std::size_t> picks, int k, std::uint64_t seed) {
    std::vector<std::size_t> distinct(picks.begin(), picks.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < static_cast<std::size_t>(k))
        throw InsufficientDataError("resample has " + std::to_string(distinct.size()) +
                                    " distinct rows, fewer than the " + std::to_string(k) + " folds");
    const auto by_row = kfold_split(distinct.size(), k, seed);
    std::vector<int> fold_of(distinct.size());
    for (std::size_t f = 0; f < by_row.size(); ++f)
        for (auto d : by_row[f]) fold_of[d] = static_cast<int>(f);
    Folds folds(static_cast<std::size_t>(k));
    for (std::size_t p = 0; p < picks.size(); ++p) {
        const auto d = static_cast<std::size_t>(
            std::lower_bound(distinct.begin(), distinct.end(), picks[p]) - distinct.begin());
        folds[static_cast<std::size_t>(fold_of[d])].push_back(p);
    }
    return folds;
}

// One bootstrap replicate: cross-fitted residual slopes averaged over folds.
double replicate_estimate(const DmlData& sample, const Folds& folds, const DmlTask& task) {
    const auto y_res =
        residualize(sample.outcome_features, sample.outcome, task.learner_outcome, folds);
    const auto t_res =
        residualize(sample.treatment_features, sample.treatment, task.learner_treatment, folds);
    double sum = 0.0;
    std::vector<double> fy, ft;
    for (const auto& fold : folds) {
        fy.clear();
        ft.clear();
        for (auto i : fold) {
            fy.push_back(y_res[i]);
            ft.push_back(t_res[i]);
        }
        sum += ols_slope(fy, ft);
    }
    return sum / static_cast<double>(folds.size());
}

std::vector<std::size_t> resample(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = static_cast<std::size_t>(uniform_below(rng, n));
    return rows;
}

}  // namespace

ResidualizationMap ResidualizationMap::for_technology(Technology tech) {
    ResidualizationMap m;
    const bool wind = tech == Technology::wind;
    m.outcome_confounders = {
        std::string(col::year),         std::string(col::month),
        std::string(col::day_of_week),  std::string(col::hour),
        std::string(col::daylight_hours), std::string(col::estimated_load),
        std::string(col::gas_price),    std::string(col::carbon_price),
        std::string(wind ? col::solar_forecast : col::wind_forecast)};
    m.treatment_confounders = {std::string(col::month), std::string(col::hour),
                               std::string(col::daylight_hours),
                               std::string(wind ? col::wind_capacity : col::solar_capacity)};
    return m;
}

std::span<const std::size_t> WindowPlan::rows(std::size_t w) const {
    const auto& win = windows.at(w);
    return std::span<const std::size_t>(order).subspan(win.start, win.size());
}

WindowPlan plan_windows(const MarketTable& table, const std::string& conditioning_col,
                        std::size_t window_size, std::size_t step) {
    if (window_size < 1) throw ArgumentError("window size must be >= 1");
    if (step < 1) throw ArgumentError("window step must be >= 1");
    const auto x = table.column(conditioning_col);

    WindowPlan plan;
    plan.conditioning_col = conditioning_col;
    plan.window_size = window_size;
    plan.step = step;
    for (std::size_t i = 0; i < table.n_rows(); ++i)
        if (!is_null(x[i])) plan.order.push_back(i);
    const auto n = plan.order.size();
    if (n < window_size)
        throw InsufficientDataError("window size " + std::to_string(window_size) + " exceeds the " +
                                    std::to_string(n) + " rows with a '" + conditioning_col +
                                    "' value; use a window size of at most " + std::to_string(n));
    if (n < table.n_rows())
        plan.warnings.push_back(std::to_string(table.n_rows() - n) + " rows with null '" +
                                conditioning_col + "' are outside every window");

    const bool timed = table.has_timestamps();
    std::stable_sort(plan.order.begin(), plan.order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        if (timed) return table.timestamps()[a] < table.timestamps()[b];
        return a < b;
    });
    if (x[plan.order.front()] == x[plan.order.back()])
        plan.warnings.push_back("conditioning column '" + conditioning_col +
                                "' is constant; window membership follows tie order");

    auto add = [&](std::size_t start) {
        Window w;
        w.start = start;
        w.end = start + window_size;
        const auto mid = start + window_size / 2;
        w.center = window_size % 2 ? x[plan.order[mid]]
                                   : 0.5 * (x[plan.order[mid - 1]] + x[plan.order[mid]]);
        plan.windows.push_back(w);
    };
    const auto slack = n - window_size;
    for (std::size_t start = 0; start <= slack; start += step) add(start);
    if (slack % step != 0) add(slack);
    return plan;
}

CateCurve estimate_cate_curve(const MarketTable& table, const DmlTask& base_task,
                              const ResidualizationMap& map, const WindowPlan& plan,
                              const CateOptions& options) {
    if (options.bootstrap < 1) throw ArgumentError("bootstrap count must be >= 1");
    if (!(options.coverage > 0.0 && options.coverage < 1.0))
        throw ArgumentError("coverage must lie in (0, 1)");
    DmlTask task = base_task;
    if (!map.outcome_confounders.empty()) task.confounder_cols = map.outcome_confounders;
    if (!map.treatment_confounders.empty()) task.treatment_confounder_cols = map.treatment_confounders;
    task.validate();

    const auto data = DmlData::from_table(table, task);
    std::vector<std::ptrdiff_t> data_index(table.n_rows(), -1);
    for (std::size_t i = 0; i < data.source_rows.size(); ++i)
        data_index[data.source_rows[i]] = static_cast<std::ptrdiff_t>(i);

    const auto n_windows = plan.windows.size();
    const auto replicates = static_cast<std::size_t>(options.bootstrap);
    const auto min_rows = static_cast<std::size_t>(10 * task.folds);

    CateCurve curve;
    curve.conditioning_col = plan.conditioning_col;
    curve.coverage = options.coverage;
    curve.replicates = options.bootstrap;
    curve.fast = options.fast;
    curve.failures.assign(n_windows, {});
    curve.window_sizes.resize(n_windows);

    std::vector<std::vector<std::size_t>> members(n_windows);
    for (std::size_t w = 0; w < n_windows; ++w) {
        curve.centers.push_back(plan.windows[w].center);
        for (auto row : plan.rows(w))
            if (data_index[row] >= 0) members[w].push_back(static_cast<std::size_t>(data_index[row]));
        curve.window_sizes[w] = members[w].size();
        if (members[w].size() < min_rows)
            curve.failures[w] = "insufficient_data: window has " + std::to_string(members[w].size()) +
                                " complete rows, needs " + std::to_string(min_rows);
    }

    std::vector<std::vector<double>> boot(n_windows, std::vector<double>(replicates, kNull));
    std::vector<std::vector<std::string>> errors(n_windows, std::vector<std::string>(replicates));

    auto run_guarded = [&](std::size_t w, std::size_t b, auto&& body) {
        try {
            boot[w][b] = body();
        } catch (const Error& e) {
            errors[w][b] = e.kind() + ": " + e.what();
        }
    };

    if (!options.fast) {
        parallel_for(n_windows * replicates, options.jobs, [&](std::size_t job) {
            const auto w = job / replicates;
            const auto b = job % replicates;
            if (!curve.failures[w].empty()) return;
            run_guarded(w, b, [&] {
                const auto& rows = members[w];
                const auto picks = resample(rows.size(), derive_seed(task.seed, w, 2 * b));
                std::vector<std::size_t> sample_rows(picks.size());
                for (std::size_t i = 0; i < picks.size(); ++i) sample_rows[i] = rows[picks[i]];
                const auto folds =
                    grouped_folds(picks, task.folds, derive_seed(task.seed, w, 2 * b + 1));
                return replicate_estimate(data.subset(sample_rows), folds, task);
            });
        });
    } else {
        parallel_for(n_windows, options.jobs, [&](std::size_t w) {
            if (!curve.failures[w].empty()) return;
            std::vector<double> y_res, t_res;
            try {
                const auto window = data.subset(members[w]);
                const auto folds =
                    kfold_split(window.size(), task.folds, derive_seed(task.seed, w, ~0ULL));
                y_res = residualize(window.outcome_features, window.outcome, task.learner_outcome,
                                    folds);
                t_res = residualize(window.treatment_features, window.treatment,
                                    task.learner_treatment, folds);
            } catch (const Error& e) {
                curve.failures[w] = e.kind() + ": " + e.what();
                return;
            }
            for (std::size_t b = 0; b < replicates; ++b) {
                run_guarded(w, b, [&] {
                    const auto picks = resample(y_res.size(), derive_seed(task.seed, w, 2 * b));
                    const auto folds = kfold_split(picks.size(), task.folds,
                                                   derive_seed(task.seed, w, 2 * b + 1));
                    double sum = 0.0;
                    std::vector<double> fy, ft;
                    for (const auto& fold : folds) {
                        fy.clear();
                        ft.clear();
                        for (auto i : fold) {
                            fy.push_back(y_res[picks[i]]);
                            ft.push_back(t_res[picks[i]]);
                        }
                        sum += ols_slope(fy, ft);
                    }
                    return sum / static_cast<double>(folds.size());
                });
            }
        });
    }

    const double tail = (1.0 - options.coverage) / 2.0;
    curve.raw.assign(n_windows, kNull);
    curve.ci_low.assign(n_windows, kNull);
    curve.ci_high.assign(n_windows, kNull);
    for (std::size_t w = 0; w < n_windows; ++w) {
        if (curve.failures[w].empty()) {
            for (std::size_t b = 0; b < replicates; ++b) {
                if (!errors[w][b].empty()) {
                    curve.failures[w] = "replicate " + std::to_string(b) + ": " + errors[w][b];
                    break;
                }
            }
        }
        if (!curve.failures[w].empty()) continue;
        curve.raw[w] = mean(boot[w]);
        curve.ci_low[w] = percentile(boot[w], tail, options.percentile_method);
        curve.ci_high[w] = percentile(boot[w], 1.0 - tail, options.percentile_method);
    }
    curve.sigma_index = options.smoothing.sigma_for(curve.raw);
    curve.smoothed = smooth_curve(curve.raw, curve.sigma_index);
    curve.ci_low_smoothed = smooth_curve(curve.ci_low, curve.sigma_index);
    curve.ci_high_smoothed = smooth_curve(curve.ci_high, curve.sigma_index);
    if (options.keep_bootstrap) curve.bootstrap = std::move(boot);
    return curve;
}

std::vector<double> observational_mean_curve(const MarketTable& table,
                                             const std::string& outcome_col,
                                             const std::string& treatment_col,
                                             const WindowPlan& plan, double treatment_scale) {
    const auto y = table.column(outcome_col);
    const auto t = table.column(treatment_col);
    std::vector<double> out(plan.windows.size(), kNull);
    std::vector<double> wy, wt;
    for (std::size_t w = 0; w < plan.windows.size(); ++w) {
        wy.clear();
        wt.clear();
        for (auto row : plan.rows(w)) {
            if (is_null(y[row]) || is_null(t[row])) continue;
            wy.push_back(y[row]);
            wt.push_back(t[row] * treatment_scale);
        }
        try {
            out[w] = ols_slope_with_intercept(wy, wt);
        } catch (const Error&) {
        }
    }
    return out;
}

std::size_t rolling_window_count(std::size_t n, std::size_t span, std::size_t step) {
    if (span == 0 || step == 0) throw ArgumentError("rolling span and step must be positive");
    if (n < span) return 0;
    return (n - span) / step + 1;
}

std::vector<TemporalCurve> rolling_temporal_cate(const MarketTable& table, const DmlTask& task,
                                                 const ResidualizationMap& map,
                                                 const RollingOptions& options) {
    const auto n = table.n_rows();
    if (n < options.span)
        throw InsufficientDataError("rolling span " + std::to_string(options.span) +
                                    " exceeds the table's " + std::to_string(n) + " rows");
    const auto ts = table.timestamps();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ts[a] < ts[b]; });

    std::vector<TemporalCurve> out;
    const auto count = rolling_window_count(n, options.span, options.step);
    for (std::size_t k = 0; k < count; ++k) {
        const auto begin = k * options.step;
        const std::span<const std::size_t> rows(order.data() + begin, options.span);
        const auto sub = table.select_rows(rows);
        const auto plan = plan_windows(sub, options.conditioning_col, options.window_size,
                                       options.window_step);
        TemporalCurve tc;
        tc.start = ts[rows.front()];
        tc.end = ts[rows.back()];
        tc.rows = rows.size();
        tc.curve = estimate_cate_curve(sub, task, map, plan, options.cate);
        out.push_back(std::move(tc));
    }
    return out;
}

ResidualizationMap penetration_map(Technology tech) {
    const bool wind = tech == Technology::wind;
    ResidualizationMap m = ResidualizationMap::for_technology(tech);
    m.treatment_confounders = {std::string(wind ? col::wind_capacity : col::solar_capacity),
                               std::string(col::daylight_hours), std::string(col::hour),
                               std::string(col::month), std::string(col::estimated_load),
                               std::string(wind ? col::wind_forecast : col::solar_forecast)};
    return m;
}

DmlTask penetration_task(const DmlTask& base, Technology tech) {
    DmlTask t = base;
    t.treatment_col = tech_name(tech) + "_penetration";
    const auto m = penetration_map(tech);
    t.confounder_cols = m.outcome_confounders;
    t.treatment_confounder_cols = m.treatment_confounders;
    t.treatment_scale = 1.0;
    return t;
}

CateCurve penetration_treatment_variant(const MarketTable& table, const DmlTask& base,
                                        Technology tech, const WindowPlan& plan,
                                        const CateOptions& options) {
    return estimate_cate_curve(table, penetration_task(base, tech), penetration_map(tech), plan,
                               options);
}

}  // namespace merit
