#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace spectrafuse::gbdt {

/// Booster settings. Defaults follow the reference XGBoost defaults with
/// subsampling disabled.
struct GBDTParams {
    int n_rounds = 100;
    double learning_rate = 0.3;
    int max_depth = 6;
    double min_child_weight = 1.0;
    double reg_lambda = 1.0;
    double gamma = 0.0;
    double base_score = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static GBDTParams from_json(const nlohmann::json& j);
};

/// A split sends x[feature] <= threshold to the left child.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    /// Optimal leaf weight -G / (H + lambda), before shrinkage.
    double weight = 0.0;
    /// Split gain for internal nodes.
    double gain = 0.0;
    /// Sum of hessians.
    double cover = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    template <typename Row>
    double predict(const Row& x) const {
        int k = 0;
        while (!nodes[k].is_leaf()) k = x[nodes[k].feature] <= nodes[k].threshold ? nodes[k].left : nodes[k].right;
        return nodes[k].weight;
    }
    int depth() const;
};

class GBDTModel {
public:
    GBDTModel(GBDTParams params, Eigen::Index n_features, std::vector<RegressionTree> trees = {});

    const GBDTParams& params() const { return params_; }
    Eigen::Index n_features() const { return n_features_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }

    /// logit(base_score) + learning_rate * sum of tree outputs.
    std::vector<double> predict_margin(const Eigen::MatrixXd& X) const;
    std::vector<double> predict_proba(const Eigen::MatrixXd& X) const;

    nlohmann::json to_json() const;
    static GBDTModel from_json(const nlohmann::json& j);

private:
    GBDTParams params_;
    Eigen::Index n_features_;
    std::vector<RegressionTree> trees_;
};

/// Second-order structure-score gain of splitting a node into (L, R).
double split_gain(double g_left, double h_left, double g_right, double h_right, double lambda, double gamma);
double leaf_weight(double g, double h, double lambda);

double sigmoid(double margin);
/// Mean logistic loss of margins against 0/1 labels.
double logistic_loss(std::span<const double> margins, std::span<const int> labels);

/// Boosts trees on X (rows = samples) against 0/1 labels with exact greedy
/// split search. Ties go to the lowest feature index, then the lowest threshold.
GBDTModel train(const Eigen::MatrixXd& X, std::span<const int> labels, const GBDTParams& params = {});

}  // namespace spectrafuse::gbdt
