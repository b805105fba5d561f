#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "staplr/errors.hpp"

namespace staplr {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf mean response
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestConfig {
    int n_trees = 100;
    int mtry = -1;  // -1: floor(p/3), at least 1
    int min_node = 5;
    std::uint64_t seed = 0;
    int n_threads = 1;
};

struct RandomForest {
    std::vector<RegressionTree> trees;
    std::vector<std::vector<std::uint16_t>> inbag;  // per tree, per row draw count
    int mtry = 0;
    int min_node = 0;
    double y_min = 0.0;
    double y_max = 0.0;
    Eigen::Index n_features = 0;
};

/// Bagged regression trees, unpruned, variance-reducing splits over mtry
/// uniformly sampled candidate features. Tree growth is parallel over trees;
/// per-tree RNG streams are derived from (seed, tree index) so the result is
/// independent of the thread count.
RandomForest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const ForestConfig& config);

double predict_tree(const RegressionTree& tree,
                    const Eigen::Ref<const Eigen::RowVectorXd>& x);

Eigen::VectorXd predict_forest(const RandomForest& forest,
                               const Eigen::MatrixXd& X_new);

}  // namespace staplr
