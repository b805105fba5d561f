#include "staplr/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace staplr {

double accuracy(const Eigen::VectorXd& p_hat, const Eigen::VectorXd& y,
                double threshold) {
    if (p_hat.size() != y.size()) throw LengthMismatch();
    int correct = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double cls = p_hat[i] >= threshold ? 1.0 : 0.0;
        if (cls == y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(y.size());
}

double msep(const Eigen::VectorXd& p_hat, const Eigen::VectorXd& p_true) {
    if (p_hat.size() != p_true.size()) throw LengthMismatch();
    return (p_hat - p_true).squaredNorm() / static_cast<double>(p_hat.size());
}

double deviance(const Eigen::VectorXd& p_hat, const Eigen::VectorXd& y) {
    if (p_hat.size() != y.size()) throw LengthMismatch();
    double d = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double p = std::min(1.0 - 1e-12, std::max(1e-12, p_hat[i]));
        d -= 2.0 * (y[i] * std::log(p) + (1.0 - y[i]) * std::log1p(-p));
    }
    return d;
}

SelectionEval selection_eval(const std::vector<bool>& selected,
                             const std::vector<bool>& signal) {
    if (selected.size() != signal.size()) throw LengthMismatch();
    const int V = static_cast<int>(selected.size());
    int n_signal = 0, n_noise = 0, tp = 0, fp = 0, agree = 0, n_selected = 0;
    for (int v = 0; v < V; ++v) {
        if (signal[v]) {
            ++n_signal;
            if (selected[v]) ++tp;
        } else {
            ++n_noise;
            if (selected[v]) ++fp;
        }
        if (selected[v]) ++n_selected;
        if (selected[v] == signal[v]) ++agree;
    }
    SelectionEval e;
    e.proportion_correct = static_cast<double>(agree) / V;
    if (n_signal > 0) e.tpr = static_cast<double>(tp) / n_signal;
    if (n_noise > 0) e.fpr = static_cast<double>(fp) / n_noise;
    e.fdr = n_selected > 0 ? static_cast<double>(fp) / n_selected : 0.0;
    return e;
}

double log_runtime(double seconds) {
    if (!(seconds > 0.0)) throw NonPositiveDuration();
    return std::log(seconds);
}

}  // namespace staplr
