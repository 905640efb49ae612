#include "merit/local_poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "merit/error.hpp"
#include "merit/parallel.hpp"
#include "merit/stats.hpp"

namespace merit {
namespace {

constexpr double kMaxCondition = 1e12;

std::string describe(Point2 p) {
    std::ostringstream os;
    os << "fitting point (level=" << p.level << ", hour=" << p.hour << ")";
    return os.str();
}

double distance(Point2 a, Point2 b) { return std::hypot(a.level - b.level, a.hour - b.hour); }

struct Weighted {
    Eigen::MatrixXd design;  // rows with nonzero weight
    std::vector<double> y;
    std::vector<double> w;
    double bandwidth = 0.0;
    double density = 0.0;
};

Weighted localize(Point2 center, const LocalSample& data) {
    if (data.points.size() != data.values.size())
        throw ArgumentError("local sample has mismatched point and value counts");
    Weighted out;
    out.bandwidth = adaptive_bandwidth(center, data.points);
    std::vector<std::size_t> keep;
    std::vector<double> weights;
    for (std::size_t i = 0; i < data.points.size(); ++i) {
        const double w = tricube_weight(distance(center, data.points[i]) / out.bandwidth);
        if (w > 0.0) {
            keep.push_back(i);
            weights.push_back(w);
            out.density += w;
        }
    }
    out.design.resize(static_cast<Eigen::Index>(keep.size()), kPolyTerms);
    out.y.resize(keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const auto& p = data.points[keep[k]];
        const auto z = expand_features(p.level, p.hour);
        for (std::size_t j = 0; j < kPolyTerms; ++j)
            out.design(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = z[j];
        out.y[k] = data.values[keep[k]];
    }
    out.w = std::move(weights);
    return out;
}

// Weighted least squares through QR of diag(sqrt(w)) * Z. Returns nullopt when
// the scaled design is rank deficient or too ill-conditioned.
std::optional<Eigen::VectorXd> weighted_ls(const Eigen::MatrixXd& z, std::span<const double> y,
                                           std::span<const double> w) {
    const auto n = z.rows();
    Eigen::MatrixXd a(n, z.cols());
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = std::sqrt(w[static_cast<std::size_t>(i)]);
        a.row(i) = s * z.row(i);
        b(i) = s * y[static_cast<std::size_t>(i)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < z.cols()) return std::nullopt;
    const Eigen::MatrixXd r =
        qr.matrixR().topLeftCorner(z.cols(), z.cols()).triangularView<Eigen::Upper>();
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues();
    if (sv.minCoeff() <= 0.0 || sv.maxCoeff() / sv.minCoeff() > kMaxCondition)
        return std::nullopt;
    return Eigen::VectorXd(qr.solve(b));
}

}  // namespace

PolyCoefficients expand_features(double level, double hour) {
    return {1.0, level, hour, level * level, level * hour, hour * hour};
}

double tricube_weight(double d) {
    if (d >= 1.0) return 0.0;
    const double t = 1.0 - d * d * d;
    return t * t * t;
}

double adaptive_bandwidth(Point2 center, std::span<const Point2> data, double pct) {
    if (data.empty()) throw ArgumentError("bandwidth needs at least one observation");
    std::vector<double> d(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) d[i] = distance(center, data[i]);
    const double h = percentile(d, pct);
    if (!(h > 0.0))
        throw DegenerateBandwidthError("zero bandwidth at " + describe(center) +
                                       ": too many observations coincide with it");
    return h;
}

double LocalModel::predict(Point2 x) const {
    const auto z = expand_features(x.level, x.hour);
    double v = 0.0;
    for (std::size_t j = 0; j < kPolyTerms; ++j) v += z[j] * beta[j];
    return v;
}

LocalModel fit_local_mean(Point2 center, const LocalSample& data) {
    const auto local = localize(center, data);
    LocalModel m;
    m.center = center;
    m.bandwidth = local.bandwidth;
    m.density = local.density;
    m.effective_n = local.y.size();
    if (m.effective_n < kPolyTerms)
        throw RankDeficiencyError(describe(center) + " has only " +
                                  std::to_string(m.effective_n) + " weighted observations");
    const auto beta = weighted_ls(local.design, local.y, local.w);
    if (!beta) throw RankDeficiencyError("weighted design is singular or ill-conditioned at " +
                                         describe(center));
    for (std::size_t j = 0; j < kPolyTerms; ++j) m.beta[j] = (*beta)(static_cast<Eigen::Index>(j));
    return m;
}

double pinball_loss(double r, double q) { return r * (q - (r < 0.0 ? 1.0 : 0.0)); }

QuantileSolution solve_weighted_quantile(const Eigen::MatrixXd& z, std::span<const double> y,
                                         std::span<const double> w, double q,
                                         const QuantileOptions& opt) {
    if (!(q > 0.0 && q < 1.0)) throw ArgumentError("quantile level must lie in (0, 1)");
    const auto n = static_cast<std::size_t>(z.rows());
    if (y.size() != n || w.size() != n) throw ArgumentError("quantile fit: size mismatch");
    if (n < static_cast<std::size_t>(z.cols()))
        throw RankDeficiencyError("quantile fit has fewer rows than coefficients");

    const double eps = opt.smoothing;
    auto smoothed = [&](const Eigen::VectorXd& beta) {
        const Eigen::VectorXd fit = z * beta;
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - fit(static_cast<Eigen::Index>(i));
            s += w[i] * (0.5 * std::sqrt(r * r + eps * eps) + (q - 0.5) * r);
        }
        return s;
    };

    QuantileSolution sol;
    auto start = weighted_ls(z, y, w);
    if (!start) throw RankDeficiencyError("quantile fit: weighted design is singular");
    sol.beta = *start;
    double obj = smoothed(sol.beta);
    std::vector<double> v(n), target(n);
    double last_decrease = INFINITY;
    bool converged = false;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        // Majorize sqrt(r^2 + eps^2) at the current residuals: a weighted least
        // squares problem in beta with shifted targets.
        const Eigen::VectorXd fit = z * sol.beta;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - fit(static_cast<Eigen::Index>(i));
            const double s = std::sqrt(r * r + eps * eps);
            v[i] = w[i] / (2.0 * s);
            target[i] = y[i] + (2.0 * q - 1.0) * s;
        }
        auto next = weighted_ls(z, target, v);
        if (!next) throw RankDeficiencyError("quantile fit: reweighted design is singular");
        const double next_obj = smoothed(*next);
        sol.iterations = it;
        last_decrease = obj - next_obj;
        if (next_obj <= obj) {
            sol.beta = *next;
            obj = next_obj;
        }
        if (last_decrease < opt.tolerance * std::max(1.0, std::abs(obj))) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream os;
        os << "quantile fit did not converge in " << opt.max_iterations
           << " iterations; last objective decrease " << last_decrease;
        throw ConvergenceError(os.str());
    }
    const Eigen::VectorXd fit = z * sol.beta;
    sol.objective = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        sol.objective += w[i] * pinball_loss(y[i] - fit(static_cast<Eigen::Index>(i)), q);
    return sol;
}

LocalModel fit_local_quantile(Point2 center, const LocalSample& data, double q,
                              const QuantileOptions& options) {
    if (!(q > 0.0 && q < 1.0)) throw ArgumentError("quantile level must lie in (0, 1)");
    const auto local = localize(center, data);
    LocalModel m;
    m.center = center;
    m.bandwidth = local.bandwidth;
    m.density = local.density;
    m.effective_n = local.y.size();
    m.quantile = q;
    if (m.effective_n < kPolyTerms)
        throw RankDeficiencyError(describe(center) + " has only " +
                                  std::to_string(m.effective_n) + " weighted observations");
    QuantileSolution sol;
    try {
        sol = solve_weighted_quantile(local.design, local.y, local.w, q, options);
    } catch (const RankDeficiencyError& e) {
        throw RankDeficiencyError(std::string(e.what()) + " at " + describe(center));
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(std::string(e.what()) + " at " + describe(center));
    }
    for (std::size_t j = 0; j < kPolyTerms; ++j) m.beta[j] = sol.beta(static_cast<Eigen::Index>(j));
    return m;
}

FittingGrid FittingGrid::regular(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw ArgumentError("fitting grid must be non-empty");
    FittingGrid g;
    g.rows = rows;
    g.cols = cols;
    auto axis = [](std::size_t k, std::size_t n) {
        return n == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(n - 1);
    };
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) g.points.push_back({axis(c, cols), axis(r, rows)});
    return g;
}

Point2 Normalization::apply(double level, double hour) const {
    return {(level - level_min) / (level_max - level_min),
            (hour - hour_min) / (hour_max - hour_min)};
}

Point2 Normalization::invert(Point2 p) const {
    return {level_min + p.level * (level_max - level_min),
            hour_min + p.hour * (hour_max - hour_min)};
}

std::size_t LocalFitGrid::failures() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const auto& e) { return !e.model; }));
}

LocalFitGrid fit_grid(const MarketTable& table, std::string_view value_col,
                      std::string_view level_col, std::string_view hour_col,
                      const FittingGrid& grid, const GridOptions& options) {
    if (grid.points.empty()) throw ArgumentError("fitting grid must be non-empty");
    if (options.kind == FitKind::quantile && !(options.quantile > 0.0 && options.quantile < 1.0))
        throw ArgumentError("quantile level must lie in (0, 1)");
    const std::vector<std::string> cols = {std::string(value_col), std::string(level_col),
                                           std::string(hour_col)};
    const auto rows = table.complete_rows(cols);
    if (rows.empty()) throw EmptyDataError("no complete rows for local regression");
    const auto value = table.column(value_col);
    const auto level = table.column(level_col);
    const auto hour = table.column(hour_col);

    LocalFitGrid out;
    out.grid = grid;
    out.kind = options.kind;
    if (options.kind == FitKind::quantile) out.quantile = options.quantile;
    out.n_used = rows.size();
    auto& nz = out.normalization;
    nz.level_min = nz.hour_min = INFINITY;
    nz.level_max = nz.hour_max = -INFINITY;
    for (auto i : rows) {
        nz.level_min = std::min(nz.level_min, level[i]);
        nz.level_max = std::max(nz.level_max, level[i]);
        nz.hour_min = std::min(nz.hour_min, hour[i]);
        nz.hour_max = std::max(nz.hour_max, hour[i]);
    }
    if (!(nz.level_max > nz.level_min) || !(nz.hour_max > nz.hour_min))
        throw ArgumentError("level and hour must each take at least two distinct values");

    LocalSample sample;
    sample.points.reserve(rows.size());
    sample.values.reserve(rows.size());
    for (auto i : rows) {
        sample.points.push_back(nz.apply(level[i], hour[i]));
        sample.values.push_back(value[i]);
    }

    out.entries.resize(grid.points.size());
    parallel_for(grid.points.size(), options.jobs, [&](std::size_t k) {
        auto& e = out.entries[k];
        e.center = grid.points[k];
        try {
            e.model = options.kind == FitKind::mean
                          ? fit_local_mean(e.center, sample)
                          : fit_local_quantile(e.center, sample, options.quantile,
                                               options.quantile_options);
            e.bandwidth = e.model->bandwidth;
            e.density = e.model->density;
        } catch (const Error& err) {
            e.failure = err.kind() + ": " + err.what();
        }
    });
    return out;
}

std::vector<std::size_t> quantile_crossings(const LocalFitGrid& lower, const LocalFitGrid& upper) {
    if (lower.entries.size() != upper.entries.size())
        throw ArgumentError("quantile grids differ in size");
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < lower.entries.size(); ++k) {
        const auto& a = lower.entries[k].model;
        const auto& b = upper.entries[k].model;
        if (a && b && a->prediction() > b->prediction()) out.push_back(k);
    }
    return out;
}

}  // namespace merit
