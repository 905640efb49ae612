#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "merit/error.hpp"
#include "merit/learners.hpp"

namespace merit {

RidgeModel train_ridge(const LearnerSpec& spec, const FeatureMatrix& x, std::span<const double> y) {
    const auto n = y.size();
    const auto p = x.cols();
    RidgeModel m;
    const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    m.feature_means.resize(p);
    m.feature_scales.resize(p);

    const auto rows = static_cast<Eigen::Index>(n);
    const auto cols = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows + cols, cols);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(rows + cols);
    for (std::size_t j = 0; j < p; ++j) {
        const auto& c = x.columns[j];
        const double mu = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(n);
        double ss = 0.0;
        for (double v : c) ss += (v - mu) * (v - mu);
        const double sd = std::sqrt(ss / static_cast<double>(n));
        m.feature_means[j] = mu;
        m.feature_scales[j] = sd;
        if (sd == 0.0) {
            if (spec.ridge_lambda == 0.0)
                throw RankDeficiencyError("ridge with lambda = 0: feature '" + x.names[j] +
                                          "' is constant");
            continue;
        }
        for (std::size_t i = 0; i < n; ++i)
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (c[i] - mu) / sd;
    }
    for (std::size_t i = 0; i < n; ++i) b(static_cast<Eigen::Index>(i)) = y[i] - y_mean;
    // Penalty rows turn the ridge problem into ordinary least squares.
    const double root_lambda = std::sqrt(spec.ridge_lambda);
    for (Eigen::Index j = 0; j < cols; ++j) a(rows + j, j) = root_lambda;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(cols);
    if (cols > 0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        if (qr.rank() < cols)
            throw RankDeficiencyError("ridge design is rank deficient (lambda = " +
                                      std::to_string(spec.ridge_lambda) + ")");
        beta = qr.solve(b);
    }

    m.intercept = y_mean;
    m.coefficients.resize(p);
    m.standardized_coefficients.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        const double s = m.feature_scales[j];
        const double bj = s == 0.0 ? 0.0 : beta(static_cast<Eigen::Index>(j));
        m.standardized_coefficients[j] = bj;
        m.coefficients[j] = s == 0.0 ? 0.0 : bj / s;
        m.intercept -= m.coefficients[j] * m.feature_means[j];
    }
    return m;
}

}  // namespace merit
