#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "merit/learners.hpp"
#include "merit/local_dml.hpp"

namespace merit {

enum class Analysis {
    bins,
    local_poly_mean,
    local_poly_quantile,
    dml_ate,
    dml_cate,
    dml_cate_penetration,
    rolling_cate,
    synth_validate,
};

std::string to_string(Analysis a);
std::optional<Analysis> parse_analysis(std::string_view s);

/// Everything one invocation needs. Field paths (`section.key`) match the
/// INI file layout.
struct RunConfig {
    // [run]
    std::filesystem::path input;
    std::string price = "apx";  // apx | nordpool | intraday
    Technology technology = Technology::wind;
    Analysis analysis = Analysis::dml_cate;
    std::uint64_t seed = 0;
    std::filesystem::path output = "out";
    unsigned jobs = 1;

    // [bins]
    double bin_width = 10.0;  // percentage points
    double bin_confidence = 0.95;

    // [local_poly]
    std::size_t grid_rows = 24;
    std::size_t grid_cols = 24;
    std::string level = "penetration";  // penetration | production
    std::vector<double> quantiles = {0.1, 0.5, 0.9};

    // [learner]
    LearnerSpec learner;

    // [dml]
    int folds = 5;

    // [cate]
    std::size_t window = 10'000;
    std::size_t step = 1'000;
    int bootstrap = 100;
    double coverage = 0.80;
    SigmaMode sigma_mode = SigmaMode::index;
    double sigma = 2.0;
    PercentileMethod percentile = PercentileMethod::linear;
    bool fast = false;
    bool keep_bootstrap = false;

    // [rolling]
    std::size_t rolling_span = 35'000;
    std::size_t rolling_step = 17'500;

    // [synth]
    std::string scenario = "ushape";
    std::size_t synth_rows = 0;  // 0 keeps the scenario default

    nlohmann::json to_json() const;
};

struct ConfigViolation {
    std::string field;
    std::string message;
};

/// Reads an INI file; unknown sections or keys and unparsable values throw
/// ConfigError naming the field path.
RunConfig load_config(const std::filesystem::path& path);

/// Sets one field from its `section.key` path and textual value.
void set_config_value(RunConfig& config, const std::string& field, const std::string& value);

/// Checks every field against the preconditions of the operations the
/// analysis invokes. `input_rows`, when known, enables the size checks.
std::vector<ConfigViolation> validate_config(const RunConfig& config,
                                             std::optional<std::size_t> input_rows = {});

/// Canonical column names for the configured price and technology.
std::string price_column(const RunConfig& config);
std::string treatment_column(Technology tech);
std::string penetration_column(Technology tech);

}  // namespace merit
