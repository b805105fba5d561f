#include "staplr/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "staplr/rng.hpp"

namespace staplr {

namespace {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double score = -1.0;  // sumL^2/nL + sumR^2/nR, to be maximized
};

// rows carries in-bag row indices with multiplicity.
void grow_node(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               RegressionTree& tree, int node_id, std::vector<int> rows,
               int mtry, int min_node, Rng& rng,
               std::vector<int>& feature_buf,
               std::vector<std::pair<double, double>>& scratch) {
    const int n_node = static_cast<int>(rows.size());
    double sum = 0.0, y_lo = y[rows[0]], y_hi = y[rows[0]];
    for (int r : rows) {
        sum += y[r];
        y_lo = std::min(y_lo, y[r]);
        y_hi = std::max(y_hi, y[r]);
    }
    tree.nodes[node_id].value = sum / n_node;
    if (n_node <= min_node || y_lo == y_hi) return;  // leaf

    // Sample mtry distinct candidate features, then scan them in ascending
    // index order so score ties resolve to the lowest feature index.
    const int p = static_cast<int>(X.cols());
    for (int k = 0; k < mtry; ++k) {
        const int j = k + static_cast<int>(rng.uniform_below(p - k));
        std::swap(feature_buf[k], feature_buf[j]);
    }
    std::sort(feature_buf.begin(), feature_buf.begin() + mtry);

    SplitChoice best;
    for (int k = 0; k < mtry; ++k) {
        const int f = feature_buf[k];
        scratch.clear();
        for (int r : rows) scratch.emplace_back(X(r, f), y[r]);
        std::sort(scratch.begin(), scratch.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (scratch.front().first == scratch.back().first) continue;

        double sum_left = 0.0;
        int n_left = 0;
        for (int i = 0; i < n_node - 1; ++i) {
            sum_left += scratch[i].second;
            ++n_left;
            if (scratch[i + 1].first == scratch[i].first) continue;
            const double sum_right = sum - sum_left;
            const double score = sum_left * sum_left / n_left +
                                 sum_right * sum_right / (n_node - n_left);
            if (!best.found || score > best.score) {
                best.found = true;
                best.feature = f;
                best.threshold = 0.5 * (scratch[i].first + scratch[i + 1].first);
                best.score = score;
            }
        }
    }
    if (!best.found) return;

    std::vector<int> left_rows, right_rows;
    for (int r : rows)
        (X(r, best.feature) <= best.threshold ? left_rows : right_rows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const int left_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int right_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node_id].feature = best.feature;
    tree.nodes[node_id].threshold = best.threshold;
    tree.nodes[node_id].left = left_id;
    tree.nodes[node_id].right = right_id;

    grow_node(X, y, tree, left_id, std::move(left_rows), mtry, min_node, rng,
              feature_buf, scratch);
    grow_node(X, y, tree, right_id, std::move(right_rows), mtry, min_node, rng,
              feature_buf, scratch);
}

}  // namespace

RandomForest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const ForestConfig& config) {
    const auto n = X.rows();
    const auto p = X.cols();
    if (n < 2 || p < 1) throw DimensionMismatch("fit_forest needs n >= 2, p >= 1");
    if (X.rows() != y.size()) throw LengthMismatch();
    if (!X.allFinite() || !y.allFinite()) throw NonFiniteInput();
    if (config.n_trees < 1) throw DimensionMismatch("n_trees must be >= 1");

    RandomForest forest;
    forest.mtry = config.mtry > 0
                      ? std::min<int>(config.mtry, static_cast<int>(p))
                      : std::max(1, static_cast<int>(p) / 3);
    forest.min_node = config.min_node;
    forest.y_min = y.minCoeff();
    forest.y_max = y.maxCoeff();
    forest.n_features = p;
    forest.trees.resize(config.n_trees);
    forest.inbag.resize(config.n_trees);

    const Rng root(config.seed);
#pragma omp parallel for schedule(dynamic) num_threads(config.n_threads)
    for (int t = 0; t < config.n_trees; ++t) {
        Rng rng = root.derive(static_cast<std::uint64_t>(t));
        auto& counts = forest.inbag[t];
        counts.assign(n, 0);
        std::vector<int> rows;
        rows.reserve(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto r = static_cast<int>(rng.uniform_below(n));
            ++counts[r];
            rows.push_back(r);
        }
        std::sort(rows.begin(), rows.end());

        auto& tree = forest.trees[t];
        tree.nodes.clear();
        tree.nodes.emplace_back();
        std::vector<int> feature_buf(p);
        std::iota(feature_buf.begin(), feature_buf.end(), 0);
        std::vector<std::pair<double, double>> scratch;
        scratch.reserve(rows.size());
        grow_node(X, y, tree, 0, std::move(rows), forest.mtry, forest.min_node,
                  rng, feature_buf, scratch);
    }
    return forest;
}

double predict_tree(const RegressionTree& tree,
                    const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    int id = 0;
    while (tree.nodes[id].feature >= 0) {
        const auto& nd = tree.nodes[id];
        id = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return tree.nodes[id].value;
}

Eigen::VectorXd predict_forest(const RandomForest& forest,
                               const Eigen::MatrixXd& X_new) {
    if (X_new.cols() != forest.n_features)
        throw DimensionMismatch("predictor count mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(X_new.rows());
    for (const auto& tree : forest.trees)
        for (Eigen::Index i = 0; i < X_new.rows(); ++i)
            out[i] += predict_tree(tree, X_new.row(i));
    return out / static_cast<double>(forest.trees.size());
}

}  // namespace staplr
