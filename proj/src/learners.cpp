#include "merit/learners.hpp"

#include <cmath>

#include "merit/error.hpp"

namespace merit {

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
    FeatureMatrix out;
    out.names = names;
    out.columns.resize(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        auto& dst = out.columns[j];
        const auto& src = columns[j];
        dst.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) dst[i] = src[rows[i]];
    }
    return out;
}

LearnerSpec LearnerSpec::boosted(int trees, double learning_rate) {
    LearnerSpec s;
    s.kind = LearnerKind::boosted_trees;
    s.trees = trees;
    s.learning_rate = learning_rate;
    return s;
}

LearnerSpec LearnerSpec::ridge(double lambda) {
    LearnerSpec s;
    s.kind = LearnerKind::ridge;
    s.ridge_lambda = lambda;
    return s;
}

void LearnerSpec::validate() const {
    if (trees < 1) throw ArgumentError("learner: trees must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
        throw ArgumentError("learner: learning rate must lie in (0, 1]");
    if (max_leaves < 2) throw ArgumentError("learner: max leaves must be >= 2");
    if (min_leaf_samples < 1) throw ArgumentError("learner: min leaf samples must be >= 1");
    if (!(ridge_lambda >= 0.0)) throw ArgumentError("learner: ridge lambda must be >= 0");
}

TrainedLearner::TrainedLearner(LearnerSpec spec, std::vector<std::string> feature_names,
                               std::variant<BoostedTreesModel, RidgeModel> state)
    : spec_(spec), feature_names_(std::move(feature_names)), state_(std::move(state)) {}

std::vector<double> TrainedLearner::predict(const FeatureMatrix& x) const {
    if (x.cols() != feature_names_.size())
        throw FeatureError("expected " + std::to_string(feature_names_.size()) +
                           " feature columns, got " + std::to_string(x.cols()));
    for (std::size_t j = 0; j < x.cols(); ++j) {
        if (x.names[j] != feature_names_[j])
            throw FeatureError("feature column " + std::to_string(j) + " is '" + x.names[j] +
                               "', expected '" + feature_names_[j] + "'");
    }
    const auto n = x.rows();
    std::vector<double> out(n);
    if (const auto* trees = std::get_if<BoostedTreesModel>(&state_)) {
        std::vector<double> row(x.cols());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) row[j] = x.columns[j][i];
            out[i] = trees->predict_row(row);
        }
    } else {
        const auto& ridge = std::get<RidgeModel>(state_);
        for (std::size_t i = 0; i < n; ++i) {
            double v = ridge.intercept;
            for (std::size_t j = 0; j < x.cols(); ++j) v += ridge.coefficients[j] * x.columns[j][i];
            out[i] = v;
        }
    }
    return out;
}

nlohmann::json TrainedLearner::dump() const {
    nlohmann::json j;
    j["features"] = feature_names_;
    if (const auto* trees = std::get_if<BoostedTreesModel>(&state_)) {
        j["kind"] = "boosted_trees";
        j["learning_rate"] = spec_.learning_rate;
        j["base_score"] = trees->base_score;
        auto& arr = j["trees"] = nlohmann::json::array();
        for (const auto& t : trees->trees) {
            auto nodes = nlohmann::json::array();
            for (const auto& node : t.nodes) {
                if (node.feature < 0)
                    nodes.push_back({{"leaf", node.value}});
                else
                    nodes.push_back({{"feature", feature_names_[static_cast<std::size_t>(node.feature)]},
                                     {"threshold", node.threshold},
                                     {"left", node.left},
                                     {"right", node.right}});
            }
            arr.push_back(std::move(nodes));
        }
    } else {
        const auto& ridge = std::get<RidgeModel>(state_);
        j["kind"] = "ridge";
        j["lambda"] = spec_.ridge_lambda;
        j["intercept"] = ridge.intercept;
        j["coefficients"] = ridge.coefficients;
    }
    return j;
}

TrainedLearner train(const LearnerSpec& spec, const FeatureMatrix& x, std::span<const double> y) {
    spec.validate();
    if (x.names.size() != x.cols()) throw ArgumentError("feature matrix names/columns mismatch");
    if (y.size() < 2) throw ArgumentError("training needs at least two rows");
    for (std::size_t j = 0; j < x.cols(); ++j) {
        if (x.columns[j].size() != y.size())
            throw ArgumentError("feature '" + x.names[j] + "' has " +
                                std::to_string(x.columns[j].size()) + " rows, target has " +
                                std::to_string(y.size()));
        for (double v : x.columns[j])
            if (!std::isfinite(v)) throw ArgumentError("feature '" + x.names[j] + "' has a null or non-finite entry");
    }
    for (double v : y)
        if (!std::isfinite(v)) throw ArgumentError("target has a null or non-finite entry");

    if (spec.kind == LearnerKind::ridge)
        return TrainedLearner(spec, x.names, train_ridge(spec, x, y));
    return TrainedLearner(spec, x.names, train_boosted_trees(spec, x, y));
}

}  // namespace merit
