#include "merit/run.hpp"

#include <boost/crc.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "merit/bins.hpp"
#include "merit/csv.hpp"
#include "merit/error.hpp"
#include "merit/features.hpp"
#include "merit/local_poly.hpp"
#include "merit/schema.hpp"
#include "merit/serialize.hpp"
#include "merit/stats.hpp"
#include "merit/synth.hpp"

namespace merit {
namespace {

using nlohmann::json;

struct Context {
    const RunConfig& config;
    std::string module = "cli";
    json stages = json::object();
    json input = nullptr;
    json summary = json::object();
    std::vector<std::filesystem::path> artifacts;
    std::vector<ConfigViolation> violations;

    std::filesystem::path out(const std::string& name) {
        auto p = config.output / name;
        artifacts.push_back(p);
        return p;
    }
};

MarketTable load_input(Context& ctx) {
    ctx.module = "data_model";
    const auto& path = ctx.config.input;
    if (!std::filesystem::exists(path)) throw IoError("input '" + path.string() + "' does not exist");
    ctx.input = {{"path", path.string()},
                 {"bytes", std::filesystem::file_size(path)},
                 {"crc32", file_crc32(path)}};
    auto table = derive_features(ingest_csv(path, CsvSchema::market_default()));
    const auto& prov = table.provenance();
    ctx.stages["rows_read"] = prov.rows_read;
    ctx.stages["rows_parsed"] = prov.rows_parsed;
    ctx.stages["rows_excluded"] = prov.excluded_total();
    ctx.stages["provenance"] = provenance_to_json(prov);
    return table;
}

void check_sizes(Context& ctx, std::size_t rows) {
    ctx.violations = validate_config(ctx.config, rows);
    if (ctx.violations.empty()) return;
    std::string msg;
    for (const auto& v : ctx.violations) msg += (msg.empty() ? "" : "; ") + v.field + ": " + v.message;
    throw ConfigError(msg);
}

DmlTask wind_or_solar_task(const RunConfig& c, const std::string& outcome, Technology tech) {
    const auto map = ResidualizationMap::for_technology(tech);
    DmlTask task;
    task.outcome_col = outcome;
    task.treatment_col = treatment_column(tech);
    task.confounder_cols = map.outcome_confounders;
    task.treatment_confounder_cols = map.treatment_confounders;
    task.learner_outcome = c.learner;
    task.learner_treatment = c.learner;
    task.learner_outcome.seed = c.seed;
    task.learner_treatment.seed = c.seed;
    task.folds = c.folds;
    task.seed = c.seed;
    task.treatment_scale = 1e-3;  // MW -> GW
    return task;
}

CateOptions cate_options(const RunConfig& c) {
    CateOptions o;
    o.bootstrap = c.bootstrap;
    o.coverage = c.coverage;
    o.smoothing.mode = c.sigma_mode;
    o.smoothing.value = c.sigma;
    o.percentile_method = c.percentile;
    o.fast = c.fast;
    o.keep_bootstrap = c.keep_bootstrap;
    o.jobs = c.jobs;
    return o;
}

void record_plan(Context& ctx, const WindowPlan& plan) {
    ctx.stages["rows_windowed"] = plan.order.size();
    ctx.stages["windows"] = plan.windows.size();
    if (!plan.warnings.empty()) ctx.summary["warnings"] = plan.warnings;
}

std::size_t count_failures(const CateCurve& c) {
    std::size_t n = 0;
    for (const auto& f : c.failures) n += !f.empty();
    return n;
}

void analysis_bins(Context& ctx) {
    const auto& c = ctx.config;
    const auto table = load_input(ctx);
    check_sizes(ctx, table.n_rows());
    ctx.module = "data_model";
    const auto bins = bin_mean_ci(table, price_column(c), penetration_column(c.technology),
                                  c.bin_width, c.bin_confidence);
    write_bins_csv(bins, ctx.out("bins.csv"));
    ctx.stages["bins"] = bins.size();
}

void analysis_local_poly(Context& ctx, FitKind kind) {
    const auto& c = ctx.config;
    const auto table = load_input(ctx);
    check_sizes(ctx, table.n_rows());
    ctx.module = "local_poly";
    const auto level = c.level == "production" ? treatment_column(c.technology)
                                               : penetration_column(c.technology);
    const auto grid = FittingGrid::regular(c.grid_rows, c.grid_cols);
    GridOptions opts;
    opts.kind = kind;
    opts.jobs = c.jobs;
    std::vector<LocalFitGrid> grids;
    if (kind == FitKind::mean) {
        grids.push_back(fit_grid(table, price_column(c), level, col::hour, grid, opts));
    } else {
        auto qs = c.quantiles;
        std::sort(qs.begin(), qs.end());
        for (double q : qs) {
            opts.quantile = q;
            grids.push_back(fit_grid(table, price_column(c), level, col::hour, grid, opts));
        }
        json crossings = json::array();
        for (std::size_t k = 0; k + 1 < grids.size(); ++k)
            crossings.push_back({{"lower", qs[k]},
                                 {"upper", qs[k + 1]},
                                 {"points", quantile_crossings(grids[k], grids[k + 1]).size()}});
        ctx.summary["quantile_crossings"] = crossings;
    }
    ctx.stages["rows_fitted"] = grids.front().n_used;
    std::size_t failures = 0;
    for (const auto& g : grids) failures += g.failures();
    ctx.summary["grid_failures"] = failures;
    write_grid_csv(grids, ctx.out(kind == FitKind::mean ? "loess_grid.csv" : "quantile_grid.csv"));
}

void analysis_ate(Context& ctx) {
    const auto& c = ctx.config;
    const auto table = load_input(ctx);
    check_sizes(ctx, table.n_rows());
    ctx.module = "dml_core";
    const auto task = wind_or_solar_task(c, price_column(c), c.technology);
    const auto data = DmlData::from_table(table, task);
    ctx.stages["rows_complete"] = data.size();
    const auto ate = estimate_ate(data, task);
    auto j = ate_to_json(ate);
    j["unit"] = "GBP/MWh per GW";
    j["naive_ols_slope"] = ols_slope_with_intercept(data.outcome, data.treatment);
    write_json(j, ctx.out("ate.json"));
}

void analysis_cate(Context& ctx, bool penetration) {
    const auto& c = ctx.config;
    const auto table = load_input(ctx);
    check_sizes(ctx, table.n_rows());
    ctx.module = "local_dml";
    const auto base = wind_or_solar_task(c, price_column(c), c.technology);
    const auto plan = plan_windows(table, penetration_column(c.technology), c.window, c.step);
    record_plan(ctx, plan);
    const auto task = penetration ? penetration_task(base, c.technology) : base;
    const auto map = penetration ? penetration_map(c.technology)
                                 : ResidualizationMap::for_technology(c.technology);
    const auto curve = estimate_cate_curve(table, task, map, plan, cate_options(c));
    const auto observational = observational_mean_curve(table, task.outcome_col, task.treatment_col,
                                                        plan, task.treatment_scale);
    const std::string stem = penetration ? "cate_penetration" : "cate";
    write_cate_csv(curve, ctx.out(stem + ".csv"), observational);
    auto j = cate_to_json(curve, c.keep_bootstrap);
    j["unit"] = penetration ? "GBP/MWh per percentage point" : "GBP/MWh per GW";
    j["observational"] = json::array();
    for (double v : observational) j["observational"].push_back(number_or_null(v));
    write_json(j, ctx.out(stem + ".json"));
    ctx.summary["failed_windows"] = count_failures(curve);
}

void analysis_rolling(Context& ctx) {
    const auto& c = ctx.config;
    const auto table = load_input(ctx);
    check_sizes(ctx, table.n_rows());
    ctx.module = "local_dml";
    const auto task = wind_or_solar_task(c, price_column(c), c.technology);
    RollingOptions opts;
    opts.conditioning_col = penetration_column(c.technology);
    opts.span = c.rolling_span;
    opts.step = c.rolling_step;
    opts.window_size = c.window;
    opts.window_step = c.step;
    opts.cate = cate_options(c);
    const auto curves =
        rolling_temporal_cate(table, task, ResidualizationMap::for_technology(c.technology), opts);
    ctx.stages["temporal_windows"] = curves.size();
    write_rolling_csv(curves, ctx.out("rolling.csv"));
    write_json(rolling_to_json(curves, c.keep_bootstrap), ctx.out("rolling.json"));
}

ScenarioSpec scenario_for(const RunConfig& c) {
    auto spec = ScenarioSpec::named(c.scenario);
    spec.seed = c.seed;
    if (c.synth_rows) spec.n = c.synth_rows;
    return spec;
}

void analysis_synth_validate(Context& ctx) {
    const auto& c = ctx.config;
    ctx.module = "synth";
    const auto spec = scenario_for(c);
    const auto table = generate(spec);
    ctx.stages["rows_generated"] = table.n_rows();
    check_sizes(ctx, table.n_rows());

    ctx.module = "local_dml";
    const bool pen = spec.target == TreatmentTarget::penetration;
    const auto base = wind_or_solar_task(c, std::string(col::apx_price), Technology::wind);
    const auto task = pen ? penetration_task(base, Technology::wind) : base;
    const auto map = pen ? penetration_map(Technology::wind)
                         : ResidualizationMap::for_technology(Technology::wind);
    const auto plan = plan_windows(table, conditioning_column(spec), c.window, c.step);
    record_plan(ctx, plan);
    const auto curve = estimate_cate_curve(table, task, map, plan, cate_options(c));

    std::vector<double> truth(curve.size());
    double sq_smooth = 0.0, sq_raw = 0.0;
    std::size_t used = 0, covered = 0;
    std::size_t argmin = 0;
    for (std::size_t w = 0; w < curve.size(); ++w) {
        truth[w] = true_cate(spec, curve.centers[w]);
        if (is_null(curve.raw[w])) continue;
        ++used;
        sq_smooth += std::pow(curve.smoothed[w] - truth[w], 2);
        sq_raw += std::pow(curve.raw[w] - truth[w], 2);
        covered += curve.ci_low[w] <= truth[w] && truth[w] <= curve.ci_high[w];
        if (is_null(curve.smoothed[argmin]) || curve.smoothed[w] < curve.smoothed[argmin]) argmin = w;
    }
    json report;
    report["scenario"] = c.scenario;
    report["effect"] = spec.effect.describe();
    report["windows"] = curve.size();
    report["windows_estimated"] = used;
    report["rmse_smoothed"] = used ? number_or_null(std::sqrt(sq_smooth / used)) : json(nullptr);
    report["rmse_raw"] = used ? number_or_null(std::sqrt(sq_raw / used)) : json(nullptr);
    report["ci_coverage"] = used ? json(static_cast<double>(covered) / used) : json(nullptr);
    report["coverage_nominal"] = c.coverage;
    report["argmin_center"] = used ? json(curve.centers[argmin]) : json(nullptr);
    if (spec.effect.kind == EffectFunction::Kind::ushape) report["true_vertex"] = spec.effect.x0;
    report["true_beta"] = json::array();
    for (double t : truth) report["true_beta"].push_back(t);
    write_json(report, ctx.out("synth_report.json"));
    write_cate_csv(curve, ctx.out("cate.csv"));
    write_json(cate_to_json(curve, c.keep_bootstrap), ctx.out("cate.json"));
    ctx.summary["rmse_smoothed"] = report["rmse_smoothed"];
    ctx.summary["ci_coverage"] = report["ci_coverage"];
}

RunResult execute(const RunConfig& config, const std::string& command,
                  const std::vector<ConfigViolation>& violations,
                  const std::function<void(Context&)>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Context ctx{config, "cli", json::object(), nullptr, json::object(), {}, {}};
    RunResult result;
    json error = nullptr;

    std::error_code ec;
    std::filesystem::create_directories(config.output, ec);
    if (ec) {
        result.exit_code = 1;
        result.error_kind = "io";
        result.error_message = "cannot create output directory '" + config.output.string() + "'";
        return result;
    }

    auto listed = [](const std::vector<ConfigViolation>& vs) {
        json list = json::array();
        for (const auto& v : vs) list.push_back({{"field", v.field}, {"message", v.message}});
        return list;
    };
    if (!violations.empty()) {
        error = {{"kind", "config"}, {"module", "cli"}, {"violations", listed(violations)},
                 {"message", "invalid configuration"}};
        result.exit_code = 2;
    } else {
        try {
            body(ctx);
        } catch (const ConfigError& e) {
            error = {{"kind", e.kind()}, {"module", ctx.module}, {"message", e.what()},
                     {"violations", listed(ctx.violations)}};
            result.exit_code = 2;
        } catch (const FoldError& e) {
            error = {{"kind", e.kind()}, {"module", ctx.module}, {"fold", e.fold()},
                     {"message", e.what()}};
            result.exit_code = 1;
        } catch (const Error& e) {
            error = {{"kind", e.kind()}, {"module", ctx.module}, {"message", e.what()}};
            result.exit_code = 1;
        } catch (const std::exception& e) {
            error = {{"kind", "internal"}, {"module", ctx.module}, {"message", e.what()}};
            result.exit_code = 1;
        }
    }

    if (!error.is_null()) {
        error["status"] = "error";
        result.error_kind = error["kind"].get<std::string>();
        result.error_message = error["message"].get<std::string>();
        try {
            ctx.artifacts.clear();
            write_json(error, ctx.out("error.json"));
        } catch (const Error&) {
        }
    }

    json manifest;
    manifest["status"] = error.is_null() ? "ok" : "error";
    manifest["command"] = command;
    manifest["version"] = kVersion;
    manifest["config"] = config.to_json();
    manifest["input"] = ctx.input;
    manifest["stages"] = ctx.stages;
    manifest["summary"] = ctx.summary;
    json files = json::array();
    for (const auto& p : ctx.artifacts) {
        std::error_code size_ec;
        files.push_back({{"file", p.filename().string()},
                         {"crc32", std::filesystem::exists(p) ? file_crc32(p) : 0u},
                         {"bytes", std::filesystem::exists(p) ? std::filesystem::file_size(p, size_ec) : 0u}});
    }
    manifest["artifacts"] = files;
    manifest["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        write_json(manifest, config.output / "manifest.json");
    } catch (const Error& e) {
        if (result.exit_code == 0) {
            result.exit_code = 1;
            result.error_kind = e.kind();
            result.error_message = e.what();
        }
    }
    result.artifacts = ctx.artifacts;
    return result;
}

}  // namespace

std::uint32_t file_crc32(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    boost::crc_32_type crc;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        crc.process_bytes(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return crc.checksum();
}

RunResult run(const RunConfig& config) {
    return execute(config, to_string(config.analysis), validate_config(config), [](Context& ctx) {
        switch (ctx.config.analysis) {
            case Analysis::bins: analysis_bins(ctx); break;
            case Analysis::local_poly_mean: analysis_local_poly(ctx, FitKind::mean); break;
            case Analysis::local_poly_quantile: analysis_local_poly(ctx, FitKind::quantile); break;
            case Analysis::dml_ate: analysis_ate(ctx); break;
            case Analysis::dml_cate: analysis_cate(ctx, false); break;
            case Analysis::dml_cate_penetration: analysis_cate(ctx, true); break;
            case Analysis::rolling_cate: analysis_rolling(ctx); break;
            case Analysis::synth_validate: analysis_synth_validate(ctx); break;
        }
    });
}

RunResult run_ingest(const RunConfig& config) {
    std::vector<ConfigViolation> violations;
    if (config.input.empty()) violations.push_back({"run.input", "required for ingest"});
    return execute(config, "ingest", violations, [](Context& ctx) {
        const auto table = load_input(ctx);
        write_csv(table, ctx.out("table.csv"));
        write_json(provenance_to_json(table.provenance()), ctx.out("provenance.json"));
    });
}

RunResult run_synth_generate(const RunConfig& config) {
    std::vector<ConfigViolation> violations;
    try {
        scenario_for(config).validate();
    } catch (const Error& e) {
        violations.push_back({"synth.scenario", e.what()});
    }
    return execute(config, "synth", violations, [](Context& ctx) {
        ctx.module = "synth";
        const auto table = generate(scenario_for(ctx.config));
        ctx.stages["rows_generated"] = table.n_rows();
        write_csv(table, ctx.out("synthetic.csv"));
    });
}

}  // namespace merit
