#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "staplr/errors.hpp"

namespace staplr {

struct SelectionEval {
    double proportion_correct = 0.0;
    std::optional<double> tpr;  // absent when there are no signal views
    std::optional<double> fpr;  // absent when there are no noise views
    double fdr = 0.0;           // zero when nothing is selected
};

/// Proportion classified correctly at the given threshold; p >= threshold
/// counts as class 1.
double accuracy(const Eigen::VectorXd& p_hat, const Eigen::VectorXd& y,
                double threshold = 0.5);

/// Mean squared error between predicted and true class probabilities.
double msep(const Eigen::VectorXd& p_hat, const Eigen::VectorXd& p_true);

/// Binomial deviance -2 sum[y log p + (1-y) log(1-p)], probabilities clamped
/// to [1e-12, 1-1e-12].
double deviance(const Eigen::VectorXd& p_hat, const Eigen::VectorXd& y);

SelectionEval selection_eval(const std::vector<bool>& selected,
                             const std::vector<bool>& signal);

double log_runtime(double seconds);

}  // namespace staplr
