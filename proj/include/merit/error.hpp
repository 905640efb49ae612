#pragma once

#include <stdexcept>
#include <string>

namespace merit {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI error report.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define MERIT_DEFINE_ERROR(Name, tag)                                   \
    class Name : public Error {                                         \
    public:                                                             \
        explicit Name(const std::string& what) : Error(tag, what) {}    \
    };

MERIT_DEFINE_ERROR(SchemaError, "schema")
MERIT_DEFINE_ERROR(IoError, "io")
MERIT_DEFINE_ERROR(EmptyDataError, "empty_data")
MERIT_DEFINE_ERROR(ArgumentError, "argument")
MERIT_DEFINE_ERROR(DegenerateBandwidthError, "degenerate_bandwidth")
MERIT_DEFINE_ERROR(RankDeficiencyError, "rank_deficiency")
MERIT_DEFINE_ERROR(ConvergenceError, "convergence")
MERIT_DEFINE_ERROR(FeatureError, "feature")
MERIT_DEFINE_ERROR(NoVariationError, "no_variation")
MERIT_DEFINE_ERROR(InsufficientDataError, "insufficient_data")
MERIT_DEFINE_ERROR(ConfigError, "config")

#undef MERIT_DEFINE_ERROR

/// Raised when cross-fitting fails inside one fold; wraps the learner error.
class FoldError : public Error {
public:
    FoldError(int fold, const std::string& what)
        : Error("fold", "fold " + std::to_string(fold) + ": " + what), fold_(fold) {}

    int fold() const noexcept { return fold_; }

private:
    int fold_;
};

}  // namespace merit
