#include "staplr/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "staplr/rng.hpp"

namespace staplr {

namespace {

double sigmoid(double eta) {
    if (eta >= 0.0) {
        const double e = std::exp(-eta);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double clamp_prob(double p) {
    return std::min(kProbClampHi, std::max(kProbClampLo, p));
}

void check_finite(const Eigen::MatrixXd& X) {
    if (!X.allFinite()) throw NonFiniteInput("design matrix contains non-finite values");
}

void check_outcome(const Eigen::VectorXd& y) {
    int n0 = 0, n1 = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0)
            ++n0;
        else if (y[i] == 1.0)
            ++n1;
        else
            throw NonFiniteInput("outcome must be coded 0/1");
    }
    if (n0 == 0 || n1 == 0) throw SingleClassOutcome();
}

struct Standardized {
    Eigen::MatrixXd X;   // standardized columns; zero-variance columns zeroed
    Eigen::MatrixXd X2;  // elementwise squares, cached for weight sums
    Eigen::VectorXd center;
    Eigen::VectorXd scale;
};

Standardized standardize(const Eigen::MatrixXd& X) {
    Standardized s;
    const auto n = X.rows();
    const auto p = X.cols();
    s.center = X.colwise().mean();
    s.scale.resize(p);
    s.X.resize(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::VectorXd c = X.col(j).array() - s.center[j];
        const double var = c.squaredNorm() / static_cast<double>(n);
        const double sd = std::sqrt(var);
        if (sd > 0.0) {
            s.scale[j] = sd;
            s.X.col(j) = c / sd;
        } else {
            s.scale[j] = 0.0;
            s.X.col(j).setZero();
        }
    }
    s.X2 = s.X.cwiseProduct(s.X);
    return s;
}

struct SolveState {
    Eigen::VectorXd beta;  // standardized scale
    double intercept = 0.0;
};

struct SolveResult {
    double kkt = 0.0;
    int outer_iterations = 0;
};

constexpr double kInnerTol = 1e-9;
constexpr double kOuterTol = 1e-8;
// An objective-only stop can leave 1e-5-scale coefficient error along flat
// small-lambda directions, so the outer exit also demands a settled iterate.
constexpr double kOuterCoefTol = 1e-8;
constexpr int kMaxOuter = 250;
constexpr int kMaxInnerPasses = 1000;
constexpr double kWeightFloor = 1e-5;

double penalty_value(PenaltyKind penalty, double lambda,
                     const Eigen::VectorXd& beta) {
    if (penalty == PenaltyKind::RidgeL2) return 0.5 * lambda * beta.squaredNorm();
    return lambda * beta.sum();  // nonnegative, so sum == l1 norm
}

double objective(const Standardized& s, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& omega, PenaltyKind penalty, double lambda,
                 const SolveState& st, Eigen::VectorXd* eta_out) {
    const auto n = y.size();
    Eigen::VectorXd eta =
        (s.X * st.beta).array() + st.intercept;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double p = clamp_prob(sigmoid(eta[i]));
        nll -= omega[i] * (y[i] * std::log(p) + (1.0 - y[i]) * std::log1p(-p));
    }
    if (eta_out) *eta_out = std::move(eta);
    return nll / static_cast<double>(n) + penalty_value(penalty, lambda, st.beta);
}

double kkt_residual(const Standardized& s, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& omega, PenaltyKind penalty,
                    double lambda, const SolveState& st) {
    const auto n = y.size();
    Eigen::VectorXd eta = (s.X * st.beta).array() + st.intercept;
    Eigen::VectorXd resid(n);
    for (Eigen::Index i = 0; i < n; ++i)
        resid[i] = omega[i] * (sigmoid(eta[i]) - y[i]);
    Eigen::VectorXd g = s.X.transpose() * resid / static_cast<double>(n);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < st.beta.size(); ++j) {
        if (s.scale[j] == 0.0) continue;
        double r;
        if (penalty == PenaltyKind::RidgeL2) {
            r = std::abs(g[j] + lambda * st.beta[j]);
        } else if (st.beta[j] > 0.0) {
            r = std::abs(g[j] + lambda);
        } else {
            r = std::max(0.0, -g[j] - lambda);
        }
        worst = std::max(worst, r);
    }
    return worst;
}

// IRLS outer loop with cyclic coordinate descent on the weighted quadratic
// approximation; nonnegativity enforced by clamping updates at zero.
SolveResult solve_at_lambda(const Standardized& s, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& omega, PenaltyKind penalty,
                            double lambda, SolveState& st) {
    const auto n = y.size();
    const auto p = s.X.cols();
    const double inv_n = 1.0 / static_cast<double>(n);

    Eigen::VectorXd eta;
    double obj = objective(s, y, omega, penalty, lambda, st, &eta);
    double kkt = kkt_residual(s, y, omega, penalty, lambda, st);

    int outer = 0;
    double last_change = std::numeric_limits<double>::infinity();
    for (; outer < kMaxOuter; ++outer) {
        if (kkt <= 0.5 * kKktTolerance && outer > 0 &&
            last_change <= kOuterCoefTol)
            break;

        Eigen::VectorXd w(n), resid(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double pi = sigmoid(eta[i]);
            w[i] = omega[i] * std::max(pi * (1.0 - pi), kWeightFloor);
            resid[i] = (y[i] - pi) * omega[i] / w[i];
        }
        const double w_sum = w.sum();
        Eigen::VectorXd v = s.X2.transpose() * w * inv_n;
        const Eigen::MatrixXd WX = s.X.array().colwise() * w.array();

        const SolveState prev = st;
        for (int pass = 0; pass < kMaxInnerPasses; ++pass) {
            double max_change = 0.0;
            const double d0 = w.dot(resid) / w_sum;
            if (d0 != 0.0) {
                st.intercept += d0;
                resid.array() -= d0;
                max_change = std::abs(d0);
            }
            for (Eigen::Index j = 0; j < p; ++j) {
                if (s.scale[j] == 0.0) continue;
                const double bj = st.beta[j];
                const double c = inv_n * WX.col(j).dot(resid) + v[j] * bj;
                double bj_new;
                if (penalty == PenaltyKind::RidgeL2) {
                    bj_new = c / (v[j] + lambda);
                } else {
                    bj_new = std::max(0.0, c - lambda) / v[j];
                }
                const double delta = bj_new - bj;
                if (delta != 0.0) {
                    st.beta[j] = bj_new;
                    resid -= delta * s.X.col(j);
                    max_change = std::max(max_change, std::abs(delta));
                }
            }
            if (max_change <= kInnerTol) break;
        }

        double obj_new = objective(s, y, omega, penalty, lambda, st, &eta);
        // Step halving keeps the true penalized objective non-increasing.
        int halvings = 0;
        while (obj_new > obj + 1e-12 && halvings < 30) {
            st.beta = 0.5 * (st.beta + prev.beta);
            st.intercept = 0.5 * (st.intercept + prev.intercept);
            obj_new = objective(s, y, omega, penalty, lambda, st, &eta);
            ++halvings;
        }
        if (halvings == 30 && obj_new > obj + 1e-12) {
            st = prev;
            obj_new = objective(s, y, omega, penalty, lambda, st, &eta);
        }
        kkt = kkt_residual(s, y, omega, penalty, lambda, st);
        const bool obj_converged =
            std::abs(obj - obj_new) <= kOuterTol * std::max(1.0, std::abs(obj_new));
        last_change = std::max((st.beta - prev.beta).cwiseAbs().maxCoeff(),
                               std::abs(st.intercept - prev.intercept));
        obj = obj_new;
        if (obj_converged && last_change <= kOuterCoefTol &&
            kkt <= 0.5 * kKktTolerance) {
            ++outer;
            break;
        }
    }

    if (kkt > kKktTolerance) {
        std::ostringstream msg;
        msg << "solver failed to reach KKT tolerance; achieved residual " << kkt
            << " at lambda " << lambda;
        throw ConvergenceFailure(msg.str());
    }
    return {kkt, outer};
}

PenalizedGlmModel to_model(const Standardized& s, PenaltyKind penalty,
                           double lambda, const SolveState& st,
                           const SolveResult& res) {
    PenalizedGlmModel m;
    m.penalty = penalty;
    m.lambda = lambda;
    m.center = s.center;
    m.scale = s.scale;
    m.kkt_residual = res.kkt;
    m.outer_iterations = res.outer_iterations;
    const auto p = st.beta.size();
    m.coefficients.setZero(p);
    double shift = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (s.scale[j] == 0.0) continue;
        m.coefficients[j] = st.beta[j] / s.scale[j];
        shift += st.beta[j] * s.center[j] / s.scale[j];
    }
    m.intercept = st.intercept - shift;
    return m;
}

Eigen::VectorXd normalized_weights(
    const std::optional<Eigen::VectorXd>& observation_weights, Eigen::Index n) {
    if (!observation_weights) return Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd& w = *observation_weights;
    if (w.size() != n) throw LengthMismatch("observation weights length");
    if (!w.allFinite() || (w.array() <= 0.0).any())
        throw NonFiniteInput("observation weights must be positive and finite");
    return w * (static_cast<double>(n) / w.sum());
}

double weighted_mean(const Eigen::VectorXd& y, const Eigen::VectorXd& omega) {
    return y.dot(omega) / omega.sum();
}

}  // namespace

double mean_negative_log_likelihood(const Eigen::VectorXd& p_hat,
                                    const Eigen::VectorXd& y) {
    if (p_hat.size() != y.size()) throw LengthMismatch();
    double nll = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double p = clamp_prob(p_hat[i]);
        nll -= y[i] * std::log(p) + (1.0 - y[i]) * std::log1p(-p);
    }
    return nll / static_cast<double>(y.size());
}

PenalizedGlmModel fit_penalized_logistic(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y, PenaltyKind penalty,
    double lambda, const std::optional<Eigen::VectorXd>& observation_weights) {
    if (X.rows() < 2) throw DimensionMismatch("need at least two observations");
    if (X.rows() != y.size()) throw LengthMismatch("X rows vs y length");
    check_finite(X);
    check_outcome(y);
    if (!std::isfinite(lambda) || lambda < 0.0)
        throw NonFiniteInput("lambda must be finite and nonnegative");

    const Standardized s = standardize(X);
    const Eigen::VectorXd omega = normalized_weights(observation_weights, y.size());
    SolveState st;
    st.beta.setZero(X.cols());
    st.intercept = std::log(clamp_prob(weighted_mean(y, omega)) /
                            (1.0 - clamp_prob(weighted_mean(y, omega))));
    const SolveResult res = solve_at_lambda(s, y, omega, penalty, lambda, st);
    return to_model(s, penalty, lambda, st, res);
}

LambdaGrid make_lambda_grid(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            PenaltyKind penalty, int n_values,
                            double min_ratio) {
    if (n_values < 2) throw DimensionMismatch("n_values must be >= 2");
    check_finite(X);
    check_outcome(y);
    if (min_ratio < 0.0)
        min_ratio = (X.rows() > X.cols()) ? 1e-4 : 1e-2;
    if (min_ratio <= 0.0 || min_ratio >= 1.0)
        throw NonFiniteInput("min_ratio must lie in (0,1)");

    const Standardized s = standardize(X);
    const double inv_n = 1.0 / static_cast<double>(X.rows());
    const double ybar = y.mean();
    Eigen::VectorXd score = s.X.transpose() * (y.array() - ybar).matrix() * inv_n;
    double lambda_max = score.cwiseAbs().maxCoeff();
    if (lambda_max <= 0.0) lambda_max = 1e-3;
    lambda_max *= 1.0 + 1e-9;  // keep the entry-point fit exactly zero under fp rounding
    if (penalty == PenaltyKind::RidgeL2) lambda_max *= 1000.0;

    LambdaGrid grid;
    grid.min_ratio = min_ratio;
    grid.values.resize(n_values);
    const double log_max = std::log(lambda_max);
    const double log_min = std::log(lambda_max * min_ratio);
    for (int i = 0; i < n_values; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n_values - 1);
        grid.values[i] = std::exp(log_max + t * (log_min - log_max));
    }
    grid.values[0] = lambda_max;
    grid.values[n_values - 1] = lambda_max * min_ratio;
    return grid;
}

CvTuneResult cv_tune(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     PenaltyKind penalty, const FoldAssignment& folds,
                     const LambdaGrid& grid) {
    const auto n = X.rows();
    if (static_cast<Eigen::Index>(folds.fold_of_row.size()) != n)
        throw LengthMismatch("fold assignment does not cover the rows of X");
    const int L = static_cast<int>(grid.values.size());
    Eigen::VectorXd dev_sum = Eigen::VectorXd::Zero(L);

    for (int k = 0; k < folds.K; ++k) {
        std::vector<Eigen::Index> train_rows, test_rows;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (folds.fold_of_row[i] == k)
                test_rows.push_back(i);
            else
                train_rows.push_back(i);
        }
        if (test_rows.empty()) continue;
        Eigen::MatrixXd Xtr(train_rows.size(), X.cols());
        Eigen::VectorXd ytr(train_rows.size());
        for (std::size_t r = 0; r < train_rows.size(); ++r) {
            Xtr.row(r) = X.row(train_rows[r]);
            ytr[r] = y[train_rows[r]];
        }
        bool has0 = false, has1 = false;
        for (Eigen::Index i = 0; i < ytr.size(); ++i)
            (ytr[i] == 0.0 ? has0 : has1) = true;
        if (!has0 || !has1) throw FoldWithSingleClass();

        const Standardized s = standardize(Xtr);
        const Eigen::VectorXd omega = Eigen::VectorXd::Ones(ytr.size());
        SolveState st;
        st.beta.setZero(X.cols());
        const double yb = clamp_prob(ytr.mean());
        st.intercept = std::log(yb / (1.0 - yb));

        for (int li = 0; li < L; ++li) {
            solve_at_lambda(s, ytr, omega, penalty, grid.values[li], st);
            // Out-of-fold deviance contribution at this lambda.
            for (Eigen::Index t : test_rows) {
                double eta = st.intercept;
                for (Eigen::Index j = 0; j < X.cols(); ++j) {
                    if (s.scale[j] == 0.0) continue;
                    eta += st.beta[j] * (X(t, j) - s.center[j]) / s.scale[j];
                }
                const double p = clamp_prob(sigmoid(eta));
                dev_sum[li] -=
                    2.0 * (y[t] * std::log(p) + (1.0 - y[t]) * std::log1p(-p));
            }
        }
    }

    CvTuneResult out;
    out.cv_curve = dev_sum / static_cast<double>(n);
    int best = 0;
    for (int li = 1; li < L; ++li)
        if (out.cv_curve[li] < out.cv_curve[best]) best = li;  // ties keep larger lambda
    out.best_lambda = grid.values[best];
    out.model = fit_penalized_logistic(X, y, penalty, out.best_lambda);
    return out;
}

CvTuneResult cv_tune_auto(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          PenaltyKind penalty, const FoldAssignment& folds,
                          int n_lambda, double min_ratio_floor) {
    double ratio = X.rows() > X.cols() ? 1e-4 : 1e-2;
    ratio = std::max(ratio, min_ratio_floor);
    return cv_tune(X, y, penalty, folds,
                   make_lambda_grid(X, y, penalty, n_lambda, ratio));
}

Eigen::VectorXd predict_proba(const PenalizedGlmModel& model,
                              const Eigen::MatrixXd& X_new) {
    if (X_new.cols() != model.coefficients.size())
        throw DimensionMismatch("predictor count mismatch");
    Eigen::VectorXd eta = (X_new * model.coefficients).array() + model.intercept;
    Eigen::VectorXd p(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        p[i] = clamp_prob(sigmoid(eta[i]));
    return p;
}

FoldAssignment make_folds(int n, int K, const Eigen::VectorXd& outcome,
                          std::uint64_t seed) {
    if (K < 2 || K > n) throw DimensionMismatch("need 2 <= K <= n");
    if (outcome.size() != n) throw LengthMismatch();
    std::vector<int> class1, class0;
    for (int i = 0; i < n; ++i)
        (outcome[i] == 1.0 ? class1 : class0).push_back(i);
    if (static_cast<int>(class0.size()) < K || static_cast<int>(class1.size()) < K)
        throw TooFewPerClass();

    Rng rng(seed);
    rng.shuffle(class1);
    rng.shuffle(class0);

    FoldAssignment fa;
    fa.K = K;
    fa.fold_of_row.assign(n, -1);
    // Deal both classes in one continuous cycle so overall fold sizes differ
    // by at most one while each class stays balanced across folds.
    int fold = 0;
    for (int i : class1) {
        fa.fold_of_row[i] = fold;
        fold = (fold + 1) % K;
    }
    for (int i : class0) {
        fa.fold_of_row[i] = fold;
        fold = (fold + 1) % K;
    }
    return fa;
}

}  // namespace staplr
