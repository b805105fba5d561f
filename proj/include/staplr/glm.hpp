#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "staplr/errors.hpp"

namespace staplr {

enum class PenaltyKind { RidgeL2, NonnegativeLassoL1 };

/// One fitted penalized logistic model. Coefficients are reported on the
/// original (unstandardized) predictor scale; `center`/`scale` record the
/// internal standardization applied at fit time. Predictors with zero
/// training variance have scale 0 and coefficient exactly 0.
struct PenalizedGlmModel {
    double intercept = 0.0;
    Eigen::VectorXd coefficients;
    PenaltyKind penalty = PenaltyKind::RidgeL2;
    double lambda = 0.0;
    Eigen::VectorXd center;
    Eigen::VectorXd scale;
    double kkt_residual = 0.0;
    int outer_iterations = 0;
};

/// Strictly decreasing log-spaced penalty grid; values[0] is the path entry
/// point (smallest lambda with an all-zero lasso fit).
struct LambdaGrid {
    Eigen::VectorXd values;
    double min_ratio = 0.0;
};

/// K-fold partition of rows; folds are numbered 0..K-1.
struct FoldAssignment {
    std::vector<int> fold_of_row;
    int K = 0;
};

struct CvTuneResult {
    double best_lambda = 0.0;
    PenalizedGlmModel model;
    Eigen::VectorXd cv_curve;  // mean out-of-fold binomial deviance per grid value
};

inline constexpr double kProbClampLo = 1e-12;
inline constexpr double kProbClampHi = 1.0 - 1e-12;
inline constexpr double kKktTolerance = 1e-6;

PenalizedGlmModel fit_penalized_logistic(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y, PenaltyKind penalty,
    double lambda,
    const std::optional<Eigen::VectorXd>& observation_weights = std::nullopt);

LambdaGrid make_lambda_grid(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            PenaltyKind penalty, int n_values = 100,
                            double min_ratio = -1.0);  // <0: auto by n vs p

CvTuneResult cv_tune(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     PenaltyKind penalty, const FoldAssignment& folds,
                     const LambdaGrid& grid);

/// cv_tune with the default grid; the common entry point for base and meta
/// fits. min_ratio_floor raises the automatic grid ratio (never lowers it),
/// trimming the expensive small-lambda tail for large problems.
CvTuneResult cv_tune_auto(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          PenaltyKind penalty, const FoldAssignment& folds,
                          int n_lambda = 100, double min_ratio_floor = -1.0);

Eigen::VectorXd predict_proba(const PenalizedGlmModel& model,
                              const Eigen::MatrixXd& X_new);

/// Stratified fold assignment: per-fold class counts within one observation
/// of the overall proportions, fold sizes differing by at most one.
FoldAssignment make_folds(int n, int K, const Eigen::VectorXd& outcome,
                          std::uint64_t seed);

/// Binomial deviance of the standalone penalized objective,
/// (1/n) sum of -[y log p + (1-y) log(1-p)] with clamped probabilities.
double mean_negative_log_likelihood(const Eigen::VectorXd& p_hat,
                                    const Eigen::VectorXd& y);

}  // namespace staplr
