#include "merit/dml.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "merit/error.hpp"
#include "merit/schema.hpp"
#include "merit/stats.hpp"

namespace merit {
namespace {

FeatureMatrix gather_features(const MarketTable& table, const std::vector<std::string>& names,
                              std::span<const std::size_t> rows) {
    FeatureMatrix x;
    x.names = names;
    x.columns.resize(names.size());
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto src = table.column(names[j]);
        auto& dst = x.columns[j];
        dst.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) dst[i] = src[rows[i]];
    }
    return x;
}

double variance(std::span<const double> v) {
    if (v.empty()) return 0.0;
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return ss / static_cast<double>(v.size());
}

}  // namespace

const std::vector<std::string>& DmlTask::treatment_confounders() const {
    return treatment_confounder_cols.empty() ? confounder_cols : treatment_confounder_cols;
}

void DmlTask::validate() const {
    if (outcome_col.empty() || treatment_col.empty())
        throw ArgumentError("task needs outcome and treatment columns");
    if (outcome_col == treatment_col) throw ArgumentError("outcome and treatment are the same column");
    if (folds < 2) throw ArgumentError("task needs at least 2 folds");
    if (!(treatment_scale > 0.0)) throw ArgumentError("treatment scale must be positive");
    for (const auto* set : {&confounder_cols, &treatment_confounders()}) {
        for (const auto& c : *set) {
            if (c == outcome_col) throw ArgumentError("outcome '" + c + "' listed as a confounder");
            if (c == treatment_col) throw ArgumentError("treatment '" + c + "' listed as a confounder");
        }
    }
    for (const auto& c : {outcome_col, treatment_col})
        if (is_truth_column(c)) throw ArgumentError("'" + c + "' is a hidden truth column");
    for (const auto* set : {&confounder_cols, &treatment_confounders()})
        for (const auto& c : *set)
            if (is_truth_column(c)) throw ArgumentError("'" + c + "' is a hidden truth column");
    learner_outcome.validate();
    learner_treatment.validate();
}

DmlData DmlData::from_table(const MarketTable& table, const DmlTask& task) {
    task.validate();
    std::vector<std::string> needed = {task.outcome_col, task.treatment_col};
    for (const auto* set : {&task.confounder_cols, &task.treatment_confounders()})
        for (const auto& c : *set)
            if (std::find(needed.begin(), needed.end(), c) == needed.end()) needed.push_back(c);
    const auto rows = table.complete_rows(needed);

    DmlData d;
    d.source_rows = rows;
    const auto y = table.column(task.outcome_col);
    const auto t = table.column(task.treatment_col);
    d.outcome.resize(rows.size());
    d.treatment.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        d.outcome[i] = y[rows[i]];
        d.treatment[i] = t[rows[i]] * task.treatment_scale;
    }
    d.outcome_features = gather_features(table, task.confounder_cols, rows);
    d.treatment_features = gather_features(table, task.treatment_confounders(), rows);
    return d;
}

DmlData DmlData::subset(std::span<const std::size_t> rows) const {
    DmlData d;
    d.outcome.resize(rows.size());
    d.treatment.resize(rows.size());
    d.source_rows.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        d.outcome[i] = outcome[rows[i]];
        d.treatment[i] = treatment[rows[i]];
        d.source_rows[i] = source_rows[rows[i]];
    }
    d.outcome_features = outcome_features.select_rows(rows);
    d.treatment_features = treatment_features.select_rows(rows);
    return d;
}

Folds kfold_split(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2) throw ArgumentError("k-fold split needs K >= 2");
    if (n < static_cast<std::size_t>(k))
        throw ArgumentError("k-fold split needs n >= K (n = " + std::to_string(n) +
                            ", K = " + std::to_string(k) + ")");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i)
        std::swap(perm[i - 1], perm[static_cast<std::size_t>(uniform_below(rng, i))]);
    Folds folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) folds[i % folds.size()].push_back(perm[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

std::vector<double> residualize(const FeatureMatrix& confounders, std::span<const double> target,
                                const LearnerSpec& learner, const Folds& folds,
                                CrossFitTrace* trace) {
    const auto n = target.size();
    if (confounders.cols() > 0 && confounders.rows() != n)
        throw ArgumentError("confounder rows do not match target length");
    std::vector<int> fold_of(n, -1);
    for (std::size_t k = 0; k < folds.size(); ++k)
        for (auto i : folds[k]) {
            if (i >= n || fold_of[i] >= 0) throw ArgumentError("folds do not partition the rows");
            fold_of[i] = static_cast<int>(k);
        }
    if (std::find(fold_of.begin(), fold_of.end(), -1) != fold_of.end())
        throw ArgumentError("folds do not partition the rows");

    if (trace) trace->training_rows.assign(folds.size(), {});
    std::vector<double> residual(n);
    std::vector<std::size_t> train_rows;
    std::vector<double> train_y;
    for (std::size_t k = 0; k < folds.size(); ++k) {
        train_rows.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (fold_of[i] != static_cast<int>(k)) train_rows.push_back(i);
        train_y.resize(train_rows.size());
        for (std::size_t i = 0; i < train_rows.size(); ++i) train_y[i] = target[train_rows[i]];
        try {
            const auto model = train(learner, confounders.select_rows(train_rows), train_y);
            const auto pred = model.predict(confounders.select_rows(folds[k]));
            for (std::size_t i = 0; i < folds[k].size(); ++i)
                residual[folds[k][i]] = target[folds[k][i]] - pred[i];
        } catch (const Error& e) {
            throw FoldError(static_cast<int>(k), e.kind() + ": " + e.what());
        }
        if (trace) trace->training_rows[k] = train_rows;
    }
    return residual;
}

std::vector<double> residualize(const MarketTable& table, const std::string& target_col,
                                const std::vector<std::string>& confounder_cols,
                                const LearnerSpec& learner, const Folds& folds) {
    std::vector<std::size_t> all(table.n_rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto x = gather_features(table, confounder_cols, all);
    const auto y = table.column(target_col);
    for (double v : y)
        if (is_null(v)) throw ArgumentError("target '" + target_col + "' has null entries");
    return residualize(x, y, learner, folds);
}

double ols_slope(std::span<const double> y, std::span<const double> t) {
    if (y.size() != t.size()) throw ArgumentError("ols_slope: length mismatch");
    if (y.size() < 2) throw ArgumentError("ols_slope needs at least two observations");
    double tt = 0.0, ty = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        tt += t[i] * t[i];
        ty += t[i] * y[i];
    }
    if (tt < 1e-12)
        throw NoVariationError("residualized treatment has no variation (t't = " +
                               std::to_string(tt) + ")");
    return ty / tt;
}

double ols_slope_with_intercept(std::span<const double> y, std::span<const double> t) {
    if (y.size() != t.size()) throw ArgumentError("ols_slope: length mismatch");
    if (y.size() < 2) throw ArgumentError("ols_slope needs at least two observations");
    const double n = static_cast<double>(y.size());
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
    const double tm = std::accumulate(t.begin(), t.end(), 0.0) / n;
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        stt += (t[i] - tm) * (t[i] - tm);
        sty += (t[i] - tm) * (y[i] - ym);
    }
    if (!(stt > 1e-12 * std::max(1.0, tm * tm) * n))
        throw NoVariationError("treatment has no variation");
    return sty / stt;
}

AteEstimate estimate_ate(const DmlData& data, const DmlTask& task) {
    task.validate();
    const auto n = data.size();
    const auto k = static_cast<std::size_t>(task.folds);
    if (n < 10 * k)
        throw InsufficientDataError("partially linear DML needs at least " +
                                    std::to_string(10 * k) + " complete rows, got " +
                                    std::to_string(n));
    const auto folds = kfold_split(n, task.folds, task.seed);
    const auto y_res = residualize(data.outcome_features, data.outcome, task.learner_outcome, folds);
    const auto t_res =
        residualize(data.treatment_features, data.treatment, task.learner_treatment, folds);

    AteEstimate est;
    est.n_used = n;
    std::vector<double> fy, ft;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        fy.clear();
        ft.clear();
        for (auto i : folds[f]) {
            fy.push_back(y_res[i]);
            ft.push_back(t_res[i]);
        }
        FoldDiagnostics d;
        d.n = folds[f].size();
        d.outcome_residual_variance = variance(fy);
        d.treatment_residual_variance = variance(ft);
        try {
            d.beta = ols_slope(fy, ft);
        } catch (const Error& e) {
            throw FoldError(static_cast<int>(f), e.kind() + ": " + e.what());
        }
        est.fold_betas.push_back(d.beta);
        est.folds.push_back(d);
    }
    est.beta_hat = std::accumulate(est.fold_betas.begin(), est.fold_betas.end(), 0.0) /
                   static_cast<double>(est.fold_betas.size());
    return est;
}

AteEstimate estimate_ate(const MarketTable& table, const DmlTask& task) {
    return estimate_ate(DmlData::from_table(table, task), task);
}

}  // namespace merit
