// merit: command-line front end. One analysis per invocation; settings come
// from an optional INI file, then --set overrides, then dedicated flags.

#include <cstdlib>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "merit/config.hpp"
#include "merit/error.hpp"
#include "merit/run.hpp"

namespace {

struct Flags {
    std::string config;
    std::string input;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    std::string out;
    std::string price;
    std::string tech;
    std::vector<std::string> sets;
    // synth only
    std::string scenario;
    std::optional<std::size_t> rows;
    bool validate = false;
};

void add_common(CLI::App* app, Flags& f, bool with_input) {
    app->add_option("--config", f.config, "INI configuration file");
    if (with_input)
        app->add_option("input,--input", f.input,
                        "market CSV; relative paths also resolve against $MERIT_DATA_DIR");
    app->add_option("--seed", f.seed, "random seed");
    app->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
    app->add_option("--out", f.out, "output directory");
    app->add_option("--price", f.price, "price series")->check(CLI::IsMember({"apx", "nordpool", "intraday"}));
    app->add_option("--tech", f.tech, "technology")->check(CLI::IsMember({"wind", "solar"}));
    app->add_option("--set", f.sets, "override a setting, e.g. --set cate.bootstrap=25");
}

std::filesystem::path resolve_input(const std::string& given) {
    const char* dir = std::getenv("MERIT_DATA_DIR");
    if (given.empty()) {
        if (dir) return std::filesystem::path(dir) / "uk_market.csv";
        return {};
    }
    std::filesystem::path p(given);
    if (dir && p.is_relative() && !std::filesystem::exists(p)) {
        auto candidate = std::filesystem::path(dir) / p;
        if (std::filesystem::exists(candidate)) return candidate;
    }
    return p;
}

merit::RunConfig effective_config(const Flags& f, std::optional<merit::Analysis> analysis) {
    merit::RunConfig c = f.config.empty() ? merit::RunConfig{} : merit::load_config(f.config);
    if (analysis) c.analysis = *analysis;
    for (const auto& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw merit::ConfigError(s + ": expected section.key=value");
        merit::set_config_value(c, s.substr(0, eq), s.substr(eq + 1));
    }
    if (!f.input.empty() || c.input.empty()) c.input = resolve_input(f.input);
    else c.input = resolve_input(c.input.string());
    if (f.seed) c.seed = *f.seed;
    if (f.jobs) c.jobs = *f.jobs;
    if (!f.out.empty()) c.output = f.out;
    if (!f.price.empty()) merit::set_config_value(c, "run.price", f.price);
    if (!f.tech.empty()) merit::set_config_value(c, "run.technology", f.tech);
    if (!f.scenario.empty()) c.scenario = f.scenario;
    if (f.rows) c.synth_rows = *f.rows;
    return c;
}

int report(const merit::RunResult& r, const merit::RunConfig& c) {
    if (r.exit_code == 0) {
        for (const auto& p : r.artifacts) std::cout << p.string() << '\n';
        std::cout << (c.output / "manifest.json").string() << '\n';
    } else {
        std::cerr << "merit: " << r.error_kind << ": " << r.error_message << " (see "
                  << (c.output / "error.json").string() << ")\n";
    }
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal and regression analysis of renewable generation and electricity prices"};
    app.set_version_flag("--version", std::string(merit::kVersion));
    app.require_subcommand(1);

    Flags f;
    struct Sub {
        const char* name;
        const char* help;
        std::optional<merit::Analysis> analysis;
    };
    const Sub subs[] = {
        {"ingest", "validate a market CSV and write the cleaned table with derived features", {}},
        {"bins", "mean price per penetration bin with confidence intervals", merit::Analysis::bins},
        {"loess", "local quadratic mean surface over (level, hour)", merit::Analysis::local_poly_mean},
        {"quantile", "local quadratic quantile surfaces", merit::Analysis::local_poly_quantile},
        {"ate", "cross-fitted partially linear average effect", merit::Analysis::dml_ate},
        {"cate", "windowed effect curve over penetration", merit::Analysis::dml_cate},
        {"cate-penetration", "effect of penetration itself", merit::Analysis::dml_cate_penetration},
        {"rolling", "effect curves on sliding chronological windows", merit::Analysis::rolling_cate},
    };
    std::vector<std::pair<CLI::App*, const Sub*>> commands;
    for (const auto& s : subs) {
        auto* cmd = app.add_subcommand(s.name, s.help);
        add_common(cmd, f, true);
        commands.emplace_back(cmd, &s);
    }
    auto* synth = app.add_subcommand("synth", "generate a synthetic scenario, or validate estimators on one");
    add_common(synth, f, false);
    synth->add_option("--scenario", f.scenario, "ushape, constant, linear, linear-ate, unconfounded, nonlinear or penetration");
    synth->add_option("--rows", f.rows, "rows to generate");
    synth->add_flag("--validate", f.validate, "run the effect curve estimator and report recovery");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            auto c = effective_config(f, f.validate ? std::optional(merit::Analysis::synth_validate)
                                                    : std::nullopt);
            return report(f.validate ? merit::run(c) : merit::run_synth_generate(c), c);
        }
        for (auto [cmd, sub] : commands) {
            if (!cmd->parsed()) continue;
            auto c = effective_config(f, sub->analysis);
            return report(sub->analysis ? merit::run(c) : merit::run_ingest(c), c);
        }
    } catch (const merit::Error& e) {
        std::cerr << "merit: " << e.kind() << ": " << e.what() << '\n';
        return 2;
    }
    return 2;
}
