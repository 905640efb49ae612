#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "merit/error.hpp"
#include "merit/local_poly.hpp"
#include "support.hpp"

using namespace merit;

namespace {

// Normal equations in long double, solved by Gaussian elimination with
// partial pivoting. Shares nothing with the library's QR path.
PolyCoefficients brute_force_wls(Point2 c, const LocalSample& s, double bandwidth) {
    long double a[6][7] = {};
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        const double d = std::hypot(s.points[i].level - c.level, s.points[i].hour - c.hour) / bandwidth;
        if (d >= 1.0) continue;
        const long double w = std::pow(1.0L - std::pow((long double)d, 3), 3);
        const long double r = s.points[i].level, h = s.points[i].hour;
        const long double z[6] = {1, r, h, r * r, r * h, h * h};
        for (int p = 0; p < 6; ++p) {
            for (int q = 0; q < 6; ++q) a[p][q] += w * z[p] * z[q];
            a[p][6] += w * z[p] * s.values[i];
        }
    }
    for (int col = 0; col < 6; ++col) {
        int piv = col;
        for (int r = col + 1; r < 6; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        for (int k = 0; k < 7; ++k) std::swap(a[col][k], a[piv][k]);
        for (int r = 0; r < 6; ++r) {
            if (r == col) continue;
            const long double f = a[r][col] / a[col][col];
            for (int k = col; k < 7; ++k) a[r][k] -= f * a[col][k];
        }
    }
    PolyCoefficients beta{};
    for (int p = 0; p < 6; ++p) beta[p] = static_cast<double>(a[p][6] / a[p][p]);
    return beta;
}

double brute_prediction(const PolyCoefficients& beta, Point2 c) {
    const auto z = expand_features(c.level, c.hour);
    double v = 0;
    for (std::size_t k = 0; k < kPolyTerms; ++k) v += beta[k] * z[k];
    return v;
}

LocalSample random_sample(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    LocalSample s;
    for (std::size_t i = 0; i < n; ++i) {
        Point2 p{u(rng), u(rng)};
        s.points.push_back(p);
        s.values.push_back(3 + 2 * p.level - p.hour + 4 * p.level * p.hour + noise(rng));
    }
    return s;
}

}  // namespace

TEST_CASE("feature expansion and tri-cube kernel") {
    CHECK(expand_features(0, 0) == PolyCoefficients{1, 0, 0, 0, 0, 0});
    CHECK(expand_features(1, 1) == PolyCoefficients{1, 1, 1, 1, 1, 1});
    CHECK(expand_features(0.5, 0.25) == PolyCoefficients{1, 0.5, 0.25, 0.25, 0.125, 0.0625});
    CHECK(tricube_weight(0.0) == 1.0);
    CHECK(tricube_weight(0.5) == doctest::Approx(0.669921875).epsilon(1e-15));
    CHECK(tricube_weight(1.0) == 0.0);
    CHECK(tricube_weight(2.0) == 0.0);
    for (double d = 0.0; d < 1.0; d += 0.01) CHECK(tricube_weight(d) >= tricube_weight(d + 0.01));
}

TEST_CASE("adaptive bandwidth is the 30th percentile distance") {
    std::vector<Point2> pts;
    for (int i = 1; i <= 11; ++i) pts.push_back({static_cast<double>(i), 0.0});
    // distances 1..11, linear interpolation at 0.3 * 10 = rank 3 -> 4
    CHECK(adaptive_bandwidth({0, 0}, pts) == doctest::Approx(4.0));
    // deciles 0.1 x10, 0.2 x10, ..., 1.0 x10 around the center
    std::vector<Point2> deciles;
    std::vector<double> dists;
    for (int d = 1; d <= 10; ++d)
        for (int k = 0; k < 10; ++k) {
            deciles.push_back({0.5 + d / 10.0, 0.5});
            dists.push_back(d / 10.0);
        }
    std::sort(dists.begin(), dists.end());
    const double rank = 0.3 * (dists.size() - 1);
    const auto lo = static_cast<std::size_t>(rank);
    const double expected = dists[lo] + (rank - lo) * (dists[lo + 1] - dists[lo]);
    CHECK(adaptive_bandwidth({0.5, 0.5}, deciles) == doctest::Approx(expected).epsilon(1e-12));
    std::vector<Point2> ring;
    for (int k = 0; k < 12; ++k) ring.push_back({0.4 * std::cos(k * 0.5), 0.4 * std::sin(k * 0.5)});
    CHECK(adaptive_bandwidth({0, 0}, ring) == doctest::Approx(0.4).epsilon(1e-12));
    std::vector<Point2> same(10, Point2{0.5, 0.5});
    CHECK_THROWS_AS(adaptive_bandwidth({0.5, 0.5}, same), DegenerateBandwidthError);
}

TEST_CASE("local mean matches brute-force weighted least squares") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t n = 40 + inst;
        auto s = random_sample(rng, n);
        const Point2 c{u(rng), u(rng)};
        auto m = fit_local_mean(c, s);
        auto ref = brute_force_wls(c, s, m.bandwidth);
        for (std::size_t p = 0; p < kPolyTerms; ++p)
            worst = std::max(worst, std::abs(m.beta[p] - ref[p]) / std::max(1.0, std::abs(ref[p])));
        worst = std::max(worst, std::abs(m.prediction() - brute_prediction(ref, c)) /
                                    std::max(1.0, std::abs(brute_prediction(ref, c))));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("local mean reproduces an exact quadratic") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LocalSample s;
    for (int i = 0; i < 300; ++i) {
        Point2 p{u(rng), u(rng)};
        s.points.push_back(p);
        s.values.push_back(1 - p.level + 2 * p.hour + 0.5 * p.level * p.level - p.level * p.hour + 3 * p.hour * p.hour);
    }
    const Point2 c{0.4, 0.6};
    auto m = fit_local_mean(c, s);
    CHECK(m.prediction() == doctest::Approx(1 - 0.4 + 1.2 + 0.08 - 0.24 + 1.08).epsilon(1e-9));
    CHECK(m.effective_n > 0);
    CHECK(m.density > 0.0);
}

TEST_CASE("local mean on exact model classes") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LocalSample plane, square;
    for (int i = 0; i < 200; ++i) {
        Point2 p{u(rng), u(rng)};
        plane.points.push_back(p);
        plane.values.push_back(3 + 2 * p.level - p.hour);
    }
    for (int a = 0; a <= 40; ++a)
        for (int b = 0; b <= 40; ++b) {
            square.points.push_back({a / 40.0, b / 40.0});
            square.values.push_back(a * a / 1600.0);
        }
    const PolyCoefficients plane_beta{3, 2, -1, 0, 0, 0};
    const PolyCoefficients square_beta{0, 0, 0, 1, 0, 0};
    auto mp = fit_local_mean({0.3, 0.7}, plane);
    auto ms = fit_local_mean({0.5, 0.5}, square);
    for (std::size_t k = 0; k < kPolyTerms; ++k) {
        CHECK(std::abs(mp.beta[k] - plane_beta[k]) < 1e-8);
        CHECK(std::abs(ms.beta[k] - square_beta[k]) < 1e-6);
    }
}

TEST_CASE("intercept-only quantiles of 1..99") {
    LocalSample s;
    for (int v = 1; v <= 99; ++v) {
        s.points.push_back({0.0, 0.0});
        s.values.push_back(v);
    }
    Eigen::MatrixXd design = Eigen::MatrixXd::Ones(99, 1);
    std::vector<double> w(99, 1.0);
    CHECK(std::abs(solve_weighted_quantile(design, s.values, w, 0.5).beta(0) - 50) <= 0.5);
    CHECK(std::abs(solve_weighted_quantile(design, s.values, w, 0.9).beta(0) - 90) <= 1.0);
}

TEST_CASE("local mean reports rank deficiency") {
    LocalSample s;
    for (int i = 0; i < 50; ++i) {
        s.points.push_back({0.5, i / 49.0});  // no variation in level
        s.values.push_back(i);
    }
    CHECK_THROWS_AS(fit_local_mean({0.5, 0.5}, s), RankDeficiencyError);
}

TEST_CASE("pinball loss") {
    CHECK(pinball_loss(2.0, 0.9) == doctest::Approx(1.8));
    CHECK(pinball_loss(-2.0, 0.9) == doctest::Approx(0.2));
    CHECK(pinball_loss(0.0, 0.5) == 0.0);
}

TEST_CASE("intercept-only quantile matches the exact minimizer of the pinball objective") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::vector<double> y(501), w(501, 1.0);
    for (auto& v : y) v = u(rng);
    Eigen::MatrixXd design = Eigen::MatrixXd::Ones(501, 1);
    for (double q : {0.1, 0.5, 0.9}) {
        auto sol = solve_weighted_quantile(design, y, w, q);
        // the objective is piecewise linear with kinks at the data; scan them
        double best = 1e300;
        for (double c : y) {
            double obj = 0;
            for (double v : y) obj += pinball_loss(v - c, q);
            best = std::min(best, obj);
        }
        CHECK(sol.objective <= best * (1 + 1e-6));
        CHECK(sol.objective >= best * (1 - 1e-12));
    }
}

TEST_CASE("linear quantile regression with weights") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 2000;
    Eigen::MatrixXd design(n, 2);
    std::vector<double> y(n), w(n);
    for (int i = 0; i < n; ++i) {
        const double x = u(rng);
        design(i, 0) = 1;
        design(i, 1) = x;
        y[i] = 1 + 2 * x + (u(rng) - 0.5);
        w[i] = 0.5 + u(rng);
    }
    auto sol = solve_weighted_quantile(design, y, w, 0.5);
    CHECK(sol.beta(0) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(sol.beta(1) == doctest::Approx(2.0).epsilon(0.05));
    // perturbing any coefficient cannot lower the objective
    for (int k = 0; k < 2; ++k)
        for (double d : {-1e-3, 1e-3}) {
            Eigen::VectorXd b = sol.beta;
            b(k) += d;
            double obj = 0;
            for (int i = 0; i < n; ++i) obj += w[i] * pinball_loss(y[i] - design.row(i).dot(b), 0.5);
            CHECK(obj >= sol.objective - 1e-9);
        }
}

TEST_CASE("grid fit over a table") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Column level, hour, value;
    for (int i = 0; i < 3000; ++i) {
        level.push_back(60 * u(rng));
        hour.push_back(std::floor(24 * u(rng)));
        value.push_back(50 - 0.5 * level.back() + hour.back());
    }
    level.push_back(kNull);
    hour.push_back(3);
    value.push_back(1);
    auto t = testing::make_table({{"p", value}, {"lvl", level}, {"hr", hour}});
    auto grid = fit_grid(t, "p", "lvl", "hr", FittingGrid::regular(6, 5));
    CHECK(grid.n_used == 3000);
    CHECK(grid.entries.size() == 30);
    CHECK(grid.failures() == 0);
    for (const auto& e : grid.entries) {
        auto raw = grid.normalization.invert(e.center);
        CHECK(e.model->prediction() == doctest::Approx(50 - 0.5 * raw.level + raw.hour).epsilon(1e-6));
    }

    GridOptions lo{FitKind::quantile, 0.1}, hi{FitKind::quantile, 0.9};
    auto ql = fit_grid(t, "p", "lvl", "hr", FittingGrid::regular(3, 3), lo);
    auto qh = fit_grid(t, "p", "lvl", "hr", FittingGrid::regular(3, 3), hi);
    CHECK(ql.quantile == 0.1);
    CHECK(quantile_crossings(ql, qh).empty());
}

TEST_CASE("grid normalization round-trips") {
    Normalization n{10, 30, 0, 23};
    auto p = n.apply(20, 11.5);
    CHECK(p.level == doctest::Approx(0.5));
    CHECK(p.hour == doctest::Approx(0.5));
    auto back = n.invert(p);
    CHECK(back.level == doctest::Approx(20));
    auto g = FittingGrid::regular();
    CHECK(g.points.size() == 576);
    CHECK(g.points.front().level == 0.0);
    CHECK(g.points.back().hour == 1.0);
}
