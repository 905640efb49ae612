#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace merit {

/// Column-major feature matrix with named columns.
struct FeatureMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    std::size_t cols() const { return columns.size(); }

    /// Gathers rows in the given order.
    FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
};

enum class LearnerKind { boosted_trees, ridge };

struct LearnerSpec {
    LearnerKind kind = LearnerKind::boosted_trees;
    int trees = 100;
    double learning_rate = 0.1;
    int max_leaves = 31;
    int min_leaf_samples = 20;
    double ridge_lambda = 1.0;
    std::uint64_t seed = 0;

    static LearnerSpec boosted(int trees = 100, double learning_rate = 0.1);
    static LearnerSpec ridge(double lambda);

    /// Throws ArgumentError when a hyperparameter is out of range.
    void validate() const;
};

/// Stagewise squared-error boosting of leaf-wise regression trees.
struct BoostedTreesModel {
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };
    struct Tree {
        std::vector<Node> nodes;  // nodes[0] is the root
    };

    double base_score = 0.0;
    std::vector<Tree> trees;
    std::vector<double> train_loss;  // mean squared error after each tree

    double predict_row(std::span<const double> row) const;
};

/// Ridge regression on standardized features; coefficients are reported on
/// the original scale.
struct RidgeModel {
    double intercept = 0.0;
    std::vector<double> coefficients;
    std::vector<double> standardized_coefficients;
    std::vector<double> feature_means;
    std::vector<double> feature_scales;
};

class TrainedLearner {
public:
    TrainedLearner(LearnerSpec spec, std::vector<std::string> feature_names,
                   std::variant<BoostedTreesModel, RidgeModel> state);

    const LearnerSpec& spec() const { return spec_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const std::variant<BoostedTreesModel, RidgeModel>& state() const { return state_; }

    /// Throws FeatureError when the columns differ from the training columns.
    std::vector<double> predict(const FeatureMatrix& x) const;

    nlohmann::json dump() const;

private:
    LearnerSpec spec_;
    std::vector<std::string> feature_names_;
    std::variant<BoostedTreesModel, RidgeModel> state_;
};

/// Deterministic in (spec, x, y).
TrainedLearner train(const LearnerSpec& spec, const FeatureMatrix& x,
                     std::span<const double> y);

BoostedTreesModel train_boosted_trees(const LearnerSpec& spec, const FeatureMatrix& x,
                                      std::span<const double> y);
RidgeModel train_ridge(const LearnerSpec& spec, const FeatureMatrix& x,
                       std::span<const double> y);

}  // namespace merit
