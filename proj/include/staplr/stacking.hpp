#pragma once

#include <vector>

#include "staplr/glm.hpp"
#include "staplr/multiview.hpp"

namespace staplr {

/// Out-of-fold prediction matrix: one column per view, cells flagged missing
/// exactly where the source dataset's view is missing.
struct CvPredictionMatrix {
    Eigen::MatrixXd z;  // n x V, valid where !missing
    BoolMatrix missing;
    FoldAssignment folds;
};

struct StackedModel {
    std::vector<PenalizedGlmModel> base_models;  // ridge, one per view
    PenalizedGlmModel meta_model;                // nonnegative lasso over views
    ViewLayout layout;
};

struct ViewSelection {
    std::vector<bool> selected;  // meta coefficient strictly positive
};

struct StaplrConfig {
    int meta_K = 10;    // folds for building Z
    int tuning_K = 10;  // folds inside each cv-tuned fit
    int min_complete_rows = 20;
    int n_lambda = 100;
    double min_ratio_floor = -1.0;  // raises the auto lambda-grid ratio
    int n_threads = 1;
    std::uint64_t base_seed = 0;  // tuning-fold streams (base and meta fits)
    std::uint64_t fold_seed = 0;  // meta-fold partition stream
};

/// Per-view cv-tuned ridge models trained on each view's complete cases.
std::vector<PenalizedGlmModel> fit_base_learners(const MultiViewDataset& data,
                                                 const StaplrConfig& config);

FoldAssignment make_meta_folds(const MultiViewDataset& data,
                               const StaplrConfig& config);

/// For each view and fold: tune a ridge model on that view's complete cases
/// outside the fold, predict the fold's observed rows. Missing cells are
/// never predicted.
CvPredictionMatrix build_z(const MultiViewDataset& data,
                           const FoldAssignment& meta_folds,
                           const StaplrConfig& config);

/// cv-tuned nonnegative lasso over a completed Z matrix.
PenalizedGlmModel fit_meta(const Eigen::MatrixXd& z_complete,
                           const Eigen::VectorXd& y, const StaplrConfig& config);

Eigen::VectorXd predict_stacked(const StackedModel& model,
                                const Eigen::MatrixXd& new_features);

ViewSelection selected_views(const StackedModel& model);

/// Full pipeline on data without missing cells in Z (complete data, or data
/// completed by feature-level imputation).
StackedModel fit_staplr(const MultiViewDataset& data, const StaplrConfig& config);

}  // namespace staplr
