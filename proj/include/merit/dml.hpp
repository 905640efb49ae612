#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "merit/learners.hpp"
#include "merit/table.hpp"

namespace merit {

/// Partially linear model p = beta * t + f(a) + eps, t = g(a) + eta.
struct DmlTask {
    std::string outcome_col;
    std::string treatment_col;
    std::vector<std::string> confounder_cols;
    /// Confounders for the treatment model; empty means `confounder_cols`.
    std::vector<std::string> treatment_confounder_cols;
    LearnerSpec learner_outcome;
    LearnerSpec learner_treatment;
    int folds = 5;
    std::uint64_t seed = 0;
    /// Multiplies the treatment column before estimation (1e-3 turns MW into GW).
    double treatment_scale = 1.0;

    const std::vector<std::string>& treatment_confounders() const;

    /// Throws ArgumentError on overlapping roles, K < 2 or hidden truth
    /// columns among the estimator inputs.
    void validate() const;
};

/// Estimator-ready arrays for the rows of a table that are complete in every
/// column the task reads.
struct DmlData {
    std::vector<double> outcome;
    std::vector<double> treatment;
    FeatureMatrix outcome_features;
    FeatureMatrix treatment_features;
    std::vector<std::size_t> source_rows;  // row index in the originating table

    static DmlData from_table(const MarketTable& table, const DmlTask& task);

    std::size_t size() const { return outcome.size(); }
    DmlData subset(std::span<const std::size_t> rows) const;
};

using Folds = std::vector<std::vector<std::size_t>>;

/// Shuffles 0..n-1 with `seed` and deals the indices round-robin into K
/// folds, so fold sizes differ by at most one.
Folds kfold_split(std::size_t n, int k, std::uint64_t seed);

/// Records which rows trained the model that predicted each fold.
struct CrossFitTrace {
    std::vector<std::vector<std::size_t>> training_rows;  // per fold
};

/// Cross-fitted residuals: row i is predicted by the model trained on every
/// fold except the one containing i.
std::vector<double> residualize(const FeatureMatrix& confounders,
                                std::span<const double> target, const LearnerSpec& learner,
                                const Folds& folds, CrossFitTrace* trace = nullptr);

/// Table-level convenience; the table must already be free of nulls in the
/// columns used.
std::vector<double> residualize(const MarketTable& table, const std::string& target_col,
                                const std::vector<std::string>& confounder_cols,
                                const LearnerSpec& learner, const Folds& folds);

/// No-intercept least squares slope (t't)^-1 t'y. Throws NoVariationError
/// when t't < 1e-12.
double ols_slope(std::span<const double> y_resid, std::span<const double> t_resid);

/// Least squares slope of y on t with an intercept. Throws NoVariationError
/// when t has no spread.
double ols_slope_with_intercept(std::span<const double> y, std::span<const double> t);

struct FoldDiagnostics {
    std::size_t n = 0;
    double beta = 0.0;
    double outcome_residual_variance = 0.0;
    double treatment_residual_variance = 0.0;
};

struct AteEstimate {
    double beta_hat = 0.0;
    std::vector<double> fold_betas;
    std::vector<FoldDiagnostics> folds;
    std::size_t n_used = 0;
};

/// Cross-fitted partially linear DML; beta_hat is the unweighted mean of the
/// per-fold residual slopes.
AteEstimate estimate_ate(const DmlData& data, const DmlTask& task);
AteEstimate estimate_ate(const MarketTable& table, const DmlTask& task);

}  // namespace merit
