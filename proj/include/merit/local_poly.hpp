#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "merit/table.hpp"

namespace merit {

/// A point in normalized (renewable level, hour) space.
struct Point2 {
    double level = 0.0;
    double hour = 0.0;
};

inline constexpr std::size_t kPolyTerms = 6;
using PolyCoefficients = std::array<double, kPolyTerms>;

/// [1, r, h, r^2, r*h, h^2]
PolyCoefficients expand_features(double level, double hour);

/// (1 - d^3)^3 for d < 1, else 0.
double tricube_weight(double distance);

/// Percentile of Euclidean distances from `data` to `center` (linear
/// interpolation, inclusive). Throws DegenerateBandwidthError when zero.
double adaptive_bandwidth(Point2 center, std::span<const Point2> data,
                          double percentile = 0.30);

/// Observations in normalized coordinates.
struct LocalSample {
    std::vector<Point2> points;
    std::vector<double> values;
};

struct LocalModel {
    Point2 center;
    PolyCoefficients beta{};
    double bandwidth = 0.0;
    std::size_t effective_n = 0;  // observations with nonzero weight
    double density = 0.0;         // sum of weights
    std::optional<double> quantile;

    double predict(Point2 x) const;
    double prediction() const { return predict(center); }
};

/// Weighted least squares with tri-cube weights at distance / bandwidth,
/// solved by QR on the row-scaled design. Throws RankDeficiencyError when
/// fewer than six rows carry weight or the condition number exceeds 1e12.
LocalModel fit_local_mean(Point2 center, const LocalSample& data);

struct QuantileOptions {
    double smoothing = 1e-6;     // pinball kink smoothing
    double tolerance = 1e-8;     // relative objective decrease
    int max_iterations = 200;
};

struct QuantileSolution {
    Eigen::VectorXd beta;
    double objective = 0.0;  // exact weighted pinball loss at beta
    int iterations = 0;
};

/// Minimizes sum_i w_i * rho_q(y_i - z_i' beta) for a general design by
/// majorize-minimize reweighted least squares on the smoothed loss
/// 0.5 * sqrt(r^2 + eps^2) + (q - 0.5) * r.
QuantileSolution solve_weighted_quantile(const Eigen::MatrixXd& design,
                                         std::span<const double> y,
                                         std::span<const double> weights, double q,
                                         const QuantileOptions& options = {});

double pinball_loss(double residual, double q);

LocalModel fit_local_quantile(Point2 center, const LocalSample& data, double q,
                              const QuantileOptions& options = {});

struct FittingGrid {
    std::size_t rows = 0;  // hour axis
    std::size_t cols = 0;  // level axis
    std::vector<Point2> points;

    /// Evenly spaced points covering [0, 1] x [0, 1]; 24 x 24 by default.
    static FittingGrid regular(std::size_t rows = 24, std::size_t cols = 24);
};

enum class FitKind { mean, quantile };

/// Affine min-max map from raw to normalized coordinates.
struct Normalization {
    double level_min = 0.0, level_max = 1.0;
    double hour_min = 0.0, hour_max = 1.0;

    Point2 apply(double level, double hour) const;
    Point2 invert(Point2 p) const;
};

struct GridEntry {
    Point2 center;
    std::optional<LocalModel> model;
    std::string failure;  // empty when model is present
    double bandwidth = 0.0;
    double density = 0.0;
};

struct LocalFitGrid {
    FittingGrid grid;
    FitKind kind = FitKind::mean;
    std::optional<double> quantile;
    Normalization normalization;
    std::size_t n_used = 0;
    std::vector<GridEntry> entries;  // one per grid point

    std::size_t failures() const;
};

struct GridOptions {
    FitKind kind = FitKind::mean;
    double quantile = 0.5;
    QuantileOptions quantile_options;
    unsigned jobs = 1;
};

/// Fits one local model per grid point. Rows with nulls in the three columns
/// are dropped; level and hour are min-max normalized over what remains.
/// Per-point failures become entries without a model.
LocalFitGrid fit_grid(const MarketTable& table, std::string_view value_col,
                      std::string_view level_col, std::string_view hour_col,
                      const FittingGrid& grid, const GridOptions& options = {});

/// Grid points where the lower-quantile prediction exceeds the upper one.
std::vector<std::size_t> quantile_crossings(const LocalFitGrid& lower,
                                            const LocalFitGrid& upper);

}  // namespace merit
