#include "spectrafuse/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spectrafuse/core.hpp"

namespace spectrafuse::gbdt {

using nlohmann::json;

void GBDTParams::validate() const {
    if (n_rounds < 0) throw SpectraError("n_rounds must be >= 0");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw SpectraError("learning_rate must lie in (0, 1]");
    if (max_depth < 1) throw SpectraError("max_depth must be >= 1");
    if (min_child_weight < 0.0) throw SpectraError("min_child_weight must be >= 0");
    if (reg_lambda < 0.0) throw SpectraError("reg_lambda must be >= 0");
    if (gamma < 0.0) throw SpectraError("gamma must be >= 0");
    if (!(base_score > 0.0 && base_score < 1.0)) throw SpectraError("base_score must lie in (0, 1)");
}

json GBDTParams::to_json() const {
    return {{"n_rounds", n_rounds},   {"learning_rate", learning_rate}, {"max_depth", max_depth},
            {"min_child_weight", min_child_weight}, {"reg_lambda", reg_lambda}, {"gamma", gamma},
            {"base_score", base_score}, {"seed", seed}};
}

GBDTParams GBDTParams::from_json(const json& j) {
    GBDTParams p;
    p.n_rounds = j.value("n_rounds", p.n_rounds);
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.max_depth = j.value("max_depth", p.max_depth);
    p.min_child_weight = j.value("min_child_weight", p.min_child_weight);
    p.reg_lambda = j.value("reg_lambda", p.reg_lambda);
    p.gamma = j.value("gamma", p.gamma);
    p.base_score = j.value("base_score", p.base_score);
    p.seed = j.value("seed", p.seed);
    p.validate();
    return p;
}

int RegressionTree::depth() const {
    std::vector<int> d(nodes.size(), 0);
    int deepest = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        deepest = std::max(deepest, d[k]);
        if (!nodes[k].is_leaf()) {
            d[nodes[k].left] = d[k] + 1;
            d[nodes[k].right] = d[k] + 1;
        }
    }
    return deepest;
}

GBDTModel::GBDTModel(GBDTParams params, Eigen::Index n_features, std::vector<RegressionTree> trees)
    : params_(params), n_features_(n_features), trees_(std::move(trees)) {}

std::vector<double> GBDTModel::predict_margin(const Eigen::MatrixXd& X) const {
    if (X.cols() != n_features_) throw SpectraError("feature count does not match trained model");
    const double base = std::log(params_.base_score / (1.0 - params_.base_score));
    std::vector<double> out(static_cast<std::size_t>(X.rows()), base);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const auto row = X.row(i);
        double acc = 0.0;
        for (const auto& t : trees_) acc += t.predict(row);
        out[static_cast<std::size_t>(i)] += params_.learning_rate * acc;
    }
    return out;
}

std::vector<double> GBDTModel::predict_proba(const Eigen::MatrixXd& X) const {
    auto m = predict_margin(X);
    for (double& v : m) v = sigmoid(v);
    return m;
}

json GBDTModel::to_json() const {
    json trees = json::array();
    for (const auto& t : trees_) {
        json jt = {{"feature", json::array()}, {"threshold", json::array()}, {"left", json::array()},
                   {"right", json::array()},   {"weight", json::array()},    {"gain", json::array()},
                   {"cover", json::array()}};
        for (const auto& n : t.nodes) {
            jt["feature"].push_back(n.feature);
            jt["threshold"].push_back(n.threshold);
            jt["left"].push_back(n.left);
            jt["right"].push_back(n.right);
            jt["weight"].push_back(n.weight);
            jt["gain"].push_back(n.gain);
            jt["cover"].push_back(n.cover);
        }
        trees.push_back(std::move(jt));
    }
    return {{"params", params_.to_json()}, {"n_features", n_features_}, {"trees", std::move(trees)}};
}

GBDTModel GBDTModel::from_json(const json& j) {
    std::vector<RegressionTree> trees;
    for (const auto& jt : j.at("trees")) {
        RegressionTree t;
        const std::size_t n = jt.at("feature").size();
        for (std::size_t k = 0; k < n; ++k)
            t.nodes.push_back({jt["feature"][k].get<int>(), jt["threshold"][k].get<double>(), jt["left"][k].get<int>(),
                               jt["right"][k].get<int>(), jt["weight"][k].get<double>(), jt["gain"][k].get<double>(),
                               jt["cover"][k].get<double>()});
        trees.push_back(std::move(t));
    }
    return GBDTModel(GBDTParams::from_json(j.at("params")), j.at("n_features").get<Eigen::Index>(), std::move(trees));
}

// ---------------------------------------------------------------------------

double split_gain(double g_left, double h_left, double g_right, double h_right, double lambda, double gamma) {
    const double g = g_left + g_right, h = h_left + h_right;
    return 0.5 * (g_left * g_left / (h_left + lambda) + g_right * g_right / (h_right + lambda) - g * g / (h + lambda)) -
           gamma;
}

double leaf_weight(double g, double h, double lambda) { return -g / (h + lambda); }

double sigmoid(double margin) { return 1.0 / (1.0 + std::exp(-margin)); }

double logistic_loss(std::span<const double> margins, std::span<const int> labels) {
    double acc = 0.0;
    for (std::size_t i = 0; i < margins.size(); ++i) {
        const double m = margins[i];
        // log(1 + exp(-m)) for positives, log(1 + exp(m)) for negatives, overflow-safe.
        const double z = labels[i] ? -m : m;
        acc += z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }
    return acc / static_cast<double>(margins.size());
}

namespace {

/// Feature columns presorted once per training run. Constant columns are
/// dropped since they admit no split.
struct SortedColumns {
    std::vector<int> features;
    std::vector<std::vector<std::uint32_t>> order;
    std::vector<std::vector<double>> values;
};

SortedColumns presort(const Eigen::MatrixXd& X) {
    SortedColumns cols;
    const auto n = static_cast<std::size_t>(X.rows());
    std::vector<std::uint32_t> idx(n);
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
        const auto col = X.col(f);
        if (col.minCoeff() == col.maxCoeff()) continue;
        std::iota(idx.begin(), idx.end(), 0u);
        std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
        std::vector<double> v(n);
        for (std::size_t k = 0; k < n; ++k) v[k] = col[idx[k]];
        cols.features.push_back(static_cast<int>(f));
        cols.order.push_back(idx);
        cols.values.push_back(std::move(v));
    }
    return cols;
}

struct Candidate {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    double g_left = 0.0, h_left = 0.0;
};

struct NodeStats {
    double g = 0.0, h = 0.0;
};

RegressionTree grow_tree(const Eigen::MatrixXd& X, const SortedColumns& cols, std::span<const double> grad,
                         std::span<const double> hess, const GBDTParams& p, std::vector<int>& leaf_of_row) {
    const std::size_t n = grad.size();
    RegressionTree tree;
    std::vector<NodeStats> stats;

    NodeStats root;
    for (std::size_t i = 0; i < n; ++i) {
        root.g += grad[i];
        root.h += hess[i];
    }
    tree.nodes.push_back({-1, 0.0, -1, -1, leaf_weight(root.g, root.h, p.reg_lambda), 0.0, root.h});
    stats.push_back(root);
    leaf_of_row.assign(n, 0);

    std::vector<int> frontier{0};
    std::vector<int> slot_of_row(n);
    for (int depth = 0; depth < p.max_depth && !frontier.empty(); ++depth) {
        const std::size_t slots = frontier.size();
        std::vector<int> slot_of_node(tree.nodes.size(), -1);
        for (std::size_t s = 0; s < slots; ++s) slot_of_node[frontier[s]] = static_cast<int>(s);
        for (std::size_t i = 0; i < n; ++i) slot_of_row[i] = slot_of_node[leaf_of_row[i]];

        std::vector<Candidate> best(slots);
        std::vector<double> gl(slots), hl(slots), last(slots);
        std::vector<char> seen(slots);
        for (std::size_t c = 0; c < cols.features.size(); ++c) {
            std::fill(gl.begin(), gl.end(), 0.0);
            std::fill(hl.begin(), hl.end(), 0.0);
            std::fill(seen.begin(), seen.end(), 0);
            const auto& order = cols.order[c];
            const auto& vals = cols.values[c];
            for (std::size_t k = 0; k < n; ++k) {
                const std::uint32_t r = order[k];
                const int s = slot_of_row[r];
                if (s < 0) continue;
                const double v = vals[k];
                if (seen[s] && v > last[s]) {
                    const NodeStats& tot = stats[frontier[s]];
                    const double gr = tot.g - gl[s], hr = tot.h - hl[s];
                    if (hl[s] >= p.min_child_weight && hr >= p.min_child_weight) {
                        const double gain = split_gain(gl[s], hl[s], gr, hr, p.reg_lambda, p.gamma);
                        if (gain > best[s].gain) {
                            double thr = 0.5 * (last[s] + v);
                            if (!(thr < v)) thr = last[s];
                            best[s] = {cols.features[c], thr, gain, gl[s], hl[s]};
                        }
                    }
                }
                gl[s] += grad[r];
                hl[s] += hess[r];
                last[s] = v;
                seen[s] = 1;
            }
        }

        std::vector<int> next;
        std::vector<int> left_of(tree.nodes.size(), -1);
        for (std::size_t s = 0; s < slots; ++s) {
            const Candidate& cand = best[s];
            if (cand.feature < 0) continue;
            const int id = frontier[s];
            const NodeStats tot = stats[id];
            const NodeStats l{cand.g_left, cand.h_left};
            const NodeStats r{tot.g - l.g, tot.h - l.h};
            const int li = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back({-1, 0.0, -1, -1, leaf_weight(l.g, l.h, p.reg_lambda), 0.0, l.h});
            tree.nodes.push_back({-1, 0.0, -1, -1, leaf_weight(r.g, r.h, p.reg_lambda), 0.0, r.h});
            stats.push_back(l);
            stats.push_back(r);
            TreeNode& node = tree.nodes[id];
            node.feature = cand.feature;
            node.threshold = cand.threshold;
            node.left = li;
            node.right = li + 1;
            node.gain = cand.gain;
            left_of[id] = li;
            next.push_back(li);
            next.push_back(li + 1);
        }
        if (next.empty()) break;
        for (std::size_t i = 0; i < n; ++i) {
            const int id = leaf_of_row[i];
            if (id < static_cast<int>(left_of.size()) && left_of[id] >= 0) {
                const TreeNode& node = tree.nodes[id];
                leaf_of_row[i] = X(static_cast<Eigen::Index>(i), node.feature) <= node.threshold ? node.left : node.right;
            }
        }
        frontier = std::move(next);
    }
    return tree;
}

}  // namespace

GBDTModel train(const Eigen::MatrixXd& X, std::span<const int> labels, const GBDTParams& params) {
    params.validate();
    const auto n = static_cast<std::size_t>(X.rows());
    if (n < 2) throw SpectraError("training needs at least 2 rows");
    if (labels.size() != n) throw SpectraError("label count does not match rows");
    if (!X.allFinite()) throw SpectraError("non-finite feature values");
    std::size_t positives = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw SpectraError("labels must be 0 or 1");
        positives += static_cast<std::size_t>(y);
    }
    if (positives == 0 || positives == n) throw SpectraError("training labels contain a single class");

    const SortedColumns cols = presort(X);
    const double base = std::log(params.base_score / (1.0 - params.base_score));
    std::vector<double> margin(n, base), grad(n), hess(n);
    std::vector<int> leaf_of_row;
    std::vector<RegressionTree> trees;
    trees.reserve(static_cast<std::size_t>(params.n_rounds));
    for (int round = 0; round < params.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double prob = sigmoid(margin[i]);
            grad[i] = prob - labels[i];
            hess[i] = prob * (1.0 - prob);
        }
        RegressionTree tree = grow_tree(X, cols, grad, hess, params, leaf_of_row);
        for (std::size_t i = 0; i < n; ++i) margin[i] += params.learning_rate * tree.nodes[leaf_of_row[i]].weight;
        trees.push_back(std::move(tree));
    }
    return GBDTModel(params, X.cols(), std::move(trees));
}

}  // namespace spectrafuse::gbdt
