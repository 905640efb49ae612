#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "merit/dml.hpp"
#include "merit/stats.hpp"
#include "merit/table.hpp"

namespace merit {

enum class Technology { wind, solar };

/// Which confounders residualize the outcome and the treatment.
struct ResidualizationMap {
    std::vector<std::string> outcome_confounders;
    std::vector<std::string> treatment_confounders;

    /// Outcome: calendar, daylight, estimated load, fuel prices and the other
    /// technology's forecast. Treatment: month, hour, daylight and the
    /// technology's installed capacity.
    static ResidualizationMap for_technology(Technology tech);
};

struct Window {
    std::size_t start = 0;  // first rank (inclusive)
    std::size_t end = 0;    // last rank (exclusive)
    double center = 0.0;    // median conditioning value in the window

    std::size_t size() const { return end - start; }
};

/// Count-based boxcar windows over rows ranked by a conditioning column.
struct WindowPlan {
    std::string conditioning_col;
    std::size_t window_size = 10'000;
    std::size_t step = 1'000;
    /// Row indices of the planned table in ascending conditioning order
    /// (ties broken by timestamp, then row index).
    std::vector<std::size_t> order;
    std::vector<Window> windows;
    std::vector<std::string> warnings;

    /// Table rows in window w.
    std::span<const std::size_t> rows(std::size_t w) const;
};

/// Windows start at ranks 0, s, 2s, ... while a full window fits; one more
/// window anchored at the top rank is added when (n - h) is not a multiple of s.
WindowPlan plan_windows(const MarketTable& table, const std::string& conditioning_col,
                        std::size_t window_size, std::size_t step);

/// Discrete Gaussian filter with half-sample symmetric (reflected) boundary
/// and a kernel truncated at four sigma. sigma = 0 is the identity. Null
/// entries are skipped and the kernel renormalized over the rest.
std::vector<double> smooth_curve(std::span<const double> raw, double sigma_index);

enum class SigmaMode {
    index,          // sigma given directly in window-index units
    sd_of_effects,  // sigma = factor * sd(raw estimates), used as index units
};

struct SmoothingRule {
    SigmaMode mode = SigmaMode::index;
    double value = 2.0;  // sigma for `index`, factor for `sd_of_effects`

    double sigma_for(std::span<const double> raw) const;
};

struct CateOptions {
    int bootstrap = 100;
    double coverage = 0.80;
    SmoothingRule smoothing;
    PercentileMethod percentile_method = PercentileMethod::linear;
    /// Train nuisances once per window and bootstrap only the residual
    /// regression. Faster; not the per-replicate retraining of the reference
    /// procedure.
    bool fast = false;
    bool keep_bootstrap = true;
    unsigned jobs = 1;
};

struct CateCurve {
    std::string conditioning_col;
    std::vector<double> centers;
    std::vector<double> raw;       // null where the window failed
    std::vector<double> smoothed;
    std::vector<double> ci_low;
    std::vector<double> ci_high;
    std::vector<double> ci_low_smoothed;
    std::vector<double> ci_high_smoothed;
    std::vector<std::size_t> window_sizes;
    std::vector<std::string> failures;          // empty string when the window succeeded
    std::vector<std::vector<double>> bootstrap;  // [window][replicate]
    double coverage = 0.80;
    double sigma_index = 0.0;
    int replicates = 0;
    bool fast = false;

    std::size_t size() const { return centers.size(); }
};

/// Per window and replicate: resample the window with replacement, cross-fit
/// both nuisances on K folds, take the per-fold residual slopes and average
/// them. The window estimate is the mean over replicates and the interval is
/// the central `coverage` percentile range of the replicate estimates.
CateCurve estimate_cate_curve(const MarketTable& table, const DmlTask& task,
                              const ResidualizationMap& map, const WindowPlan& plan,
                              const CateOptions& options = {});

/// Per-window OLS slope (with intercept) of the raw outcome on the raw
/// treatment. Null where the treatment has no spread.
std::vector<double> observational_mean_curve(const MarketTable& table,
                                             const std::string& outcome_col,
                                             const std::string& treatment_col,
                                             const WindowPlan& plan,
                                             double treatment_scale = 1.0);

struct TemporalCurve {
    Timestamp start;
    Timestamp end;
    std::size_t rows = 0;
    CateCurve curve;
};

struct RollingOptions {
    std::string conditioning_col;
    std::size_t span = 35'000;
    std::size_t step = 17'500;
    std::size_t window_size = 10'000;
    std::size_t window_step = 1'000;
    CateOptions cate;
};

/// Chronological sliding windows; within each, a conditioning-ordered plan
/// and a CATE curve. Every temporal window uses the task seed.
std::vector<TemporalCurve> rolling_temporal_cate(const MarketTable& table,
                                                 const DmlTask& task,
                                                 const ResidualizationMap& map,
                                                 const RollingOptions& options);

/// Number of chronological windows `rolling_temporal_cate` produces.
std::size_t rolling_window_count(std::size_t n, std::size_t span, std::size_t step);

/// Task whose treatment is the technology's predicted penetration (percent),
/// residualized on capacity, daylight, hour, month, estimated load and the
/// technology's forecast.
DmlTask penetration_task(const DmlTask& base, Technology tech);
ResidualizationMap penetration_map(Technology tech);

CateCurve penetration_treatment_variant(const MarketTable& table, const DmlTask& base,
                                        Technology tech, const WindowPlan& plan,
                                        const CateOptions& options = {});

}  // namespace merit
