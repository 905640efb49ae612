#include "merit/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <sstream>

#include "merit/csv.hpp"
#include "merit/error.hpp"
#include "merit/schema.hpp"
#include "merit/synth.hpp"

namespace merit {
namespace {

constexpr std::pair<Analysis, std::string_view> kAnalyses[] = {
    {Analysis::bins, "bins"},
    {Analysis::local_poly_mean, "local-poly-mean"},
    {Analysis::local_poly_quantile, "local-poly-quantile"},
    {Analysis::dml_ate, "dml-ate"},
    {Analysis::dml_cate, "dml-cate"},
    {Analysis::dml_cate_penetration, "dml-cate-penetration"},
    {Analysis::rolling_cate, "rolling-cate"},
    {Analysis::synth_validate, "synth-validate"},
};

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& field, const std::string& value, const char* expected) {
    throw ConfigError(field + ": cannot read '" + value + "' as " + expected);
}

double to_double(const std::string& field, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) bad(field, v, "a number");
    return out;
}

template <class Int>
Int to_integer(const std::string& field, const std::string& v) {
    Int out = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) bad(field, v, "a non-negative integer");
    return out;
}

bool to_bool(const std::string& field, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad(field, v, "a boolean");
}

std::vector<double> to_list(const std::string& field, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(field, trim(item)));
    return out;
}

bool parse_scenario_rows(const std::string& name, std::size_t& rows) {
    try {
        rows = ScenarioSpec::named(name).n;
        return true;
    } catch (const Error&) {
        return false;
    }
}

std::string join(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_double(xs[i]);
    return s;
}

}  // namespace

std::string to_string(Analysis a) {
    for (auto [k, name] : kAnalyses)
        if (k == a) return std::string(name);
    return "unknown";
}

std::optional<Analysis> parse_analysis(std::string_view s) {
    for (auto [k, name] : kAnalyses)
        if (name == s) return k;
    return std::nullopt;
}

void set_config_value(RunConfig& c, const std::string& field, const std::string& raw) {
    const auto v = trim(raw);
    if (field == "run.input") c.input = v;
    else if (field == "run.price") c.price = v;
    else if (field == "run.technology") {
        if (v == "wind") c.technology = Technology::wind;
        else if (v == "solar") c.technology = Technology::solar;
        else bad(field, v, "wind or solar");
    } else if (field == "run.analysis") {
        auto a = parse_analysis(v);
        if (!a) bad(field, v, "an analysis name");
        c.analysis = *a;
    } else if (field == "run.seed") c.seed = to_integer<std::uint64_t>(field, v);
    else if (field == "run.output") c.output = v;
    else if (field == "run.jobs") c.jobs = to_integer<unsigned>(field, v);
    else if (field == "bins.width") c.bin_width = to_double(field, v);
    else if (field == "bins.confidence") c.bin_confidence = to_double(field, v);
    else if (field == "local_poly.grid_rows") c.grid_rows = to_integer<std::size_t>(field, v);
    else if (field == "local_poly.grid_cols") c.grid_cols = to_integer<std::size_t>(field, v);
    else if (field == "local_poly.level") c.level = v;
    else if (field == "local_poly.quantiles") c.quantiles = to_list(field, v);
    else if (field == "learner.kind") {
        if (v == "boosted_trees") c.learner.kind = LearnerKind::boosted_trees;
        else if (v == "ridge") c.learner.kind = LearnerKind::ridge;
        else bad(field, v, "boosted_trees or ridge");
    } else if (field == "learner.trees") c.learner.trees = to_integer<int>(field, v);
    else if (field == "learner.learning_rate") c.learner.learning_rate = to_double(field, v);
    else if (field == "learner.max_leaves") c.learner.max_leaves = to_integer<int>(field, v);
    else if (field == "learner.min_leaf_samples") c.learner.min_leaf_samples = to_integer<int>(field, v);
    else if (field == "learner.ridge_lambda") c.learner.ridge_lambda = to_double(field, v);
    else if (field == "dml.folds") c.folds = to_integer<int>(field, v);
    else if (field == "cate.window") c.window = to_integer<std::size_t>(field, v);
    else if (field == "cate.step") c.step = to_integer<std::size_t>(field, v);
    else if (field == "cate.bootstrap") c.bootstrap = to_integer<int>(field, v);
    else if (field == "cate.coverage") c.coverage = to_double(field, v);
    else if (field == "cate.sigma_mode") {
        if (v == "index") c.sigma_mode = SigmaMode::index;
        else if (v == "sd_of_effects") c.sigma_mode = SigmaMode::sd_of_effects;
        else bad(field, v, "index or sd_of_effects");
    } else if (field == "cate.sigma") c.sigma = to_double(field, v);
    else if (field == "cate.percentile") {
        if (v == "linear") c.percentile = PercentileMethod::linear;
        else if (v == "inverted_cdf") c.percentile = PercentileMethod::inverted_cdf;
        else bad(field, v, "linear or inverted_cdf");
    } else if (field == "cate.fast") c.fast = to_bool(field, v);
    else if (field == "cate.keep_bootstrap") c.keep_bootstrap = to_bool(field, v);
    else if (field == "rolling.span") c.rolling_span = to_integer<std::size_t>(field, v);
    else if (field == "rolling.step") c.rolling_step = to_integer<std::size_t>(field, v);
    else if (field == "synth.scenario") c.scenario = v;
    else if (field == "synth.rows") c.synth_rows = to_integer<std::size_t>(field, v);
    else throw ConfigError(field + ": unknown setting");
}

RunConfig load_config(const std::filesystem::path& path) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(e.what());
    }
    RunConfig c;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError(section + ": setting outside a section");
        for (const auto& [key, value] : body) set_config_value(c, section + "." + key, value.data());
    }
    return c;
}

std::vector<ConfigViolation> validate_config(const RunConfig& c,
                                             std::optional<std::size_t> input_rows) {
    std::vector<ConfigViolation> v;
    auto add = [&](std::string field, std::string msg) { v.push_back({std::move(field), std::move(msg)}); };
    const auto a = c.analysis;

    if (a != Analysis::synth_validate && c.input.empty())
        add("run.input", "required for analysis " + to_string(a));
    if (c.price != "apx" && c.price != "nordpool" && c.price != "intraday")
        add("run.price", "must be apx, nordpool or intraday");
    if (c.jobs < 1) add("run.jobs", "must be >= 1");

    // Every section is range-checked; only the row checks depend on the analysis.
    if (!(c.bin_width > 0.0) || !std::isfinite(c.bin_width))
        add("bins.width", "bin_mean_ci needs a positive bin width");
    if (!(c.bin_confidence > 0.0 && c.bin_confidence < 1.0))
        add("bins.confidence", "bin_mean_ci needs a confidence in (0, 1)");
    if (c.grid_rows < 1) add("local_poly.grid_rows", "fit_grid needs at least one grid row");
    if (c.grid_cols < 1) add("local_poly.grid_cols", "fit_grid needs at least one grid column");
    if (c.level != "penetration" && c.level != "production")
        add("local_poly.level", "must be penetration or production");
    if (c.quantiles.empty()) add("local_poly.quantiles", "at least one quantile is needed");
    for (double q : c.quantiles)
        if (!(q > 0.0 && q < 1.0))
            add("local_poly.quantiles",
                "fit_local_quantile needs q in (0, 1), got " + format_double(q));
    try {
        c.learner.validate();
    } catch (const Error& e) {
        add("learner", e.what());
    }
    if (c.folds < 2) add("dml.folds", "kfold_split needs K >= 2");
    if (c.window < 1) add("cate.window", "plan_windows needs a window size >= 1");
    if (c.step < 1) add("cate.step", "plan_windows needs a step >= 1");
    if (c.folds >= 2 && c.window < static_cast<std::size_t>(10 * c.folds))
        add("cate.window", "estimate_cate_curve needs at least 10 rows per fold in each window (" +
                               std::to_string(10 * c.folds) + ")");
    if (c.bootstrap < 1) add("cate.bootstrap", "estimate_cate_curve needs B >= 1");
    if (!(c.coverage > 0.0 && c.coverage < 1.0))
        add("cate.coverage", "estimate_cate_curve needs a coverage in (0, 1)");
    if (!(c.sigma >= 0.0) || !std::isfinite(c.sigma))
        add("cate.sigma", "smooth_curve needs sigma >= 0");
    if (c.rolling_span < 1) add("rolling.span", "must be >= 1");
    if (c.rolling_step < 1) add("rolling.step", "must be >= 1");
    if (a == Analysis::rolling_cate && c.rolling_span < c.window)
        add("rolling.span", "each temporal window must hold at least one CATE window (cate.window)");
    const bool windows = a == Analysis::dml_cate || a == Analysis::dml_cate_penetration ||
                         a == Analysis::rolling_cate || a == Analysis::synth_validate;
    if (a == Analysis::synth_validate) {
        try {
            (void)ScenarioSpec::named(c.scenario);
        } catch (const Error& e) {
            add("synth.scenario", e.what());
        }
    }

    std::size_t rows_from_scenario = 0;
    std::optional<std::size_t> rows = input_rows;
    if (a == Analysis::synth_validate) {
        if (c.synth_rows)
            rows = c.synth_rows;
        else if (parse_scenario_rows(c.scenario, rows_from_scenario))
            rows = rows_from_scenario;
    }
    if (rows) {
        if (a == Analysis::dml_ate && *rows < static_cast<std::size_t>(10 * std::max(c.folds, 2)))
            add("dml.folds", "estimate_ate needs at least 10 rows per fold; input has " +
                                 std::to_string(*rows));
        if (windows && a != Analysis::rolling_cate && *rows < c.window)
            add("cate.window", "plan_windows needs at least h = " + std::to_string(c.window) +
                                   " rows; input has " + std::to_string(*rows));
        if (a == Analysis::rolling_cate && *rows < c.rolling_span)
            add("rolling.span", "rolling_temporal_cate needs at least " +
                                    std::to_string(c.rolling_span) + " rows; input has " +
                                    std::to_string(*rows));
    }
    return v;
}

std::string price_column(const RunConfig& c) {
    if (c.price == "nordpool") return std::string(col::nordpool_price);
    if (c.price == "intraday") return std::string(col::intraday_price);
    return std::string(col::apx_price);
}

std::string treatment_column(Technology tech) {
    return std::string(tech == Technology::wind ? col::wind_forecast : col::solar_forecast);
}

std::string penetration_column(Technology tech) {
    return std::string(tech == Technology::wind ? col::wind_penetration : col::solar_penetration);
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["run"] = {{"input", input.string()},
                {"price", price},
                {"technology", technology == Technology::wind ? "wind" : "solar"},
                {"analysis", to_string(analysis)},
                {"seed", seed},
                {"output", output.string()},
                {"jobs", jobs}};
    j["bins"] = {{"width", bin_width}, {"confidence", bin_confidence}};
    j["local_poly"] = {{"grid_rows", grid_rows},
                       {"grid_cols", grid_cols},
                       {"level", level},
                       {"quantiles", join(quantiles)}};
    j["learner"] = {{"kind", learner.kind == LearnerKind::ridge ? "ridge" : "boosted_trees"},
                    {"trees", learner.trees},
                    {"learning_rate", learner.learning_rate},
                    {"max_leaves", learner.max_leaves},
                    {"min_leaf_samples", learner.min_leaf_samples},
                    {"ridge_lambda", learner.ridge_lambda}};
    j["dml"] = {{"folds", folds}};
    j["cate"] = {{"window", window},
                 {"step", step},
                 {"bootstrap", bootstrap},
                 {"coverage", coverage},
                 {"sigma_mode", sigma_mode == SigmaMode::index ? "index" : "sd_of_effects"},
                 {"sigma", sigma},
                 {"percentile", percentile == PercentileMethod::linear ? "linear" : "inverted_cdf"},
                 {"fast", fast},
                 {"keep_bootstrap", keep_bootstrap}};
    j["rolling"] = {{"span", rolling_span}, {"step", rolling_step}};
    j["synth"] = {{"scenario", scenario}, {"rows", synth_rows}};
    return j;
}

}  // namespace merit
