#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "staplr/multiview.hpp"

namespace staplr {

/// Block-correlated Gaussian multi-view generator: features have unit
/// variance, correlation rho_within inside a view and rho_between across
/// views, realized exactly through a shared-factor construction. Signal-view
/// coefficients are +-2/sqrt(m_v) with equal probability; the noise view has
/// all-zero coefficients.
struct SimConfig {
    int n_train = 1000;
    int n_test = 1000;
    std::vector<int> view_sizes{5, 50, 500, 5000};
    double rho_within = 0.5;
    double rho_between = 0.2;
    int noise_view = 0;
    std::uint64_t seed = 0;

    static SimConfig paper_scale() { return SimConfig{}; }
    static SimConfig desk_scale() {
        SimConfig c;
        c.n_train = 400;
        c.n_test = 400;
        c.view_sizes = {5, 25, 125, 625};
        return c;
    }
};

struct GroundTruth {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd true_probabilities_train;
    Eigen::VectorXd true_probabilities_test;
    std::vector<bool> signal_views;
};

struct GeneratedData {
    MultiViewDataset train;
    MultiViewDataset test;
    GroundTruth truth;
};

GeneratedData gen_dataset(const SimConfig& config);

struct MissingnessPlan {
    int target_view = 0;
    double fraction = 0.5;
    std::uint64_t seed = 0;
    std::vector<int> affected_rows;  // filled by make_missingness_plan
};

/// Draws round(fraction * n) rows uniformly without replacement; MCAR by
/// construction (selection ignores features and outcome).
MissingnessPlan make_missingness_plan(int n, int target_view, double fraction,
                                      std::uint64_t seed);

MultiViewDataset inject_missingness(const MultiViewDataset& train,
                                    const MissingnessPlan& plan);

/// Writes <prefix>.csv (header view{v}_f{j}...,y) and <prefix>.mask.csv
/// (per-row, per-view 0/1 missing flags) for cross-implementation checks.
void export_delimited(const MultiViewDataset& data, const std::string& prefix);

}  // namespace staplr
