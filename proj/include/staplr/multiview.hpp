#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <vector>

#include "staplr/errors.hpp"

namespace staplr {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Partition of the feature columns into contiguous views.
struct ViewLayout {
    std::vector<int> view_sizes;
    std::vector<int> offsets;  // cumulative start column per view

    static ViewLayout from_sizes(std::vector<int> sizes) {
        ViewLayout l;
        l.view_sizes = std::move(sizes);
        if (l.view_sizes.empty()) throw DimensionMismatch("need at least one view");
        l.offsets.resize(l.view_sizes.size());
        int off = 0;
        for (std::size_t v = 0; v < l.view_sizes.size(); ++v) {
            if (l.view_sizes[v] < 1)
                throw DimensionMismatch("view sizes must be >= 1");
            l.offsets[v] = off;
            off += l.view_sizes[v];
        }
        return l;
    }

    int n_views() const { return static_cast<int>(view_sizes.size()); }
    int n_features() const {
        return std::accumulate(view_sizes.begin(), view_sizes.end(), 0);
    }
    Eigen::MatrixXd view_block(const Eigen::MatrixXd& features, int v) const {
        return features.middleCols(offsets[v], view_sizes[v]);
    }
};

/// Multi-view data with a per-(row, view) missingness mask. A view is either
/// completely observed or completely missing for a row; the outcome is always
/// fully observed.
struct MultiViewDataset {
    Eigen::MatrixXd features;  // n x m
    ViewLayout layout;
    Eigen::VectorXd outcome;  // 0/1
    BoolMatrix view_missing;  // n x V, true = missing

    Eigen::Index n_rows() const { return features.rows(); }
    bool row_complete(Eigen::Index i) const {
        for (int v = 0; v < layout.n_views(); ++v)
            if (view_missing(i, v)) return false;
        return true;
    }
};

}  // namespace staplr
