#include "staplr/stacking.hpp"

#include <algorithm>

#include "staplr/rng.hpp"

namespace staplr {

namespace {

std::vector<Eigen::Index> observed_rows(const MultiViewDataset& data, int view) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < data.n_rows(); ++i)
        if (!data.view_missing(i, view)) rows.push_back(i);
    return rows;
}

void gather(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
            const std::vector<Eigen::Index>& rows, Eigen::MatrixXd& Xs,
            Eigen::VectorXd& ys) {
    Xs.resize(rows.size(), X.cols());
    ys.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        Xs.row(r) = X.row(rows[r]);
        ys[r] = y[rows[r]];
    }
}

void require_trainable(const Eigen::VectorXd& ys, int min_rows, int view) {
    if (ys.size() < min_rows)
        throw ViewTooSparse("view " + std::to_string(view + 1) +
                            " has too few complete cases");
    bool has0 = false, has1 = false;
    for (Eigen::Index i = 0; i < ys.size(); ++i) (ys[i] == 0.0 ? has0 : has1) = true;
    if (!has0 || !has1)
        throw ViewTooSparse("view " + std::to_string(view + 1) +
                            " complete cases contain a single class");
}

}  // namespace

std::vector<PenalizedGlmModel> fit_base_learners(const MultiViewDataset& data,
                                                 const StaplrConfig& config) {
    const int V = data.layout.n_views();
    const Rng root(config.base_seed);
    std::vector<PenalizedGlmModel> models(V);
    std::exception_ptr failure = nullptr;

#pragma omp parallel for schedule(dynamic) num_threads(config.n_threads)
    for (int v = 0; v < V; ++v) {
        try {
            const auto rows = observed_rows(data, v);
            Eigen::MatrixXd Xv;
            Eigen::VectorXd yv;
            gather(data.layout.view_block(data.features, v), data.outcome, rows,
                   Xv, yv);
            require_trainable(yv, config.min_complete_rows, v);
            const auto folds =
                make_folds(static_cast<int>(rows.size()), config.tuning_K, yv,
                           splitmix64(config.base_seed ^ splitmix64(0x1000 + v)));
            models[v] = cv_tune_auto(Xv, yv, PenaltyKind::RidgeL2, folds,
                                     config.n_lambda, config.min_ratio_floor)
                            .model;
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return models;
}

FoldAssignment make_meta_folds(const MultiViewDataset& data,
                               const StaplrConfig& config) {
    return make_folds(static_cast<int>(data.n_rows()), config.meta_K,
                      data.outcome, config.fold_seed);
}

CvPredictionMatrix build_z(const MultiViewDataset& data,
                           const FoldAssignment& meta_folds,
                           const StaplrConfig& config) {
    const int V = data.layout.n_views();
    const auto n = data.n_rows();
    if (static_cast<Eigen::Index>(meta_folds.fold_of_row.size()) != n)
        throw LengthMismatch("meta folds do not cover the dataset");

    CvPredictionMatrix out;
    out.z = Eigen::MatrixXd::Zero(n, V);
    out.missing = data.view_missing;
    out.folds = meta_folds;

    const int n_jobs = V * meta_folds.K;
    std::exception_ptr failure = nullptr;

#pragma omp parallel for schedule(dynamic) num_threads(config.n_threads)
    for (int job = 0; job < n_jobs; ++job) {
        const int v = job / meta_folds.K;
        const int k = job % meta_folds.K;
        try {
            std::vector<Eigen::Index> train_rows, test_rows;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (data.view_missing(i, v)) continue;
                (meta_folds.fold_of_row[i] == k ? test_rows : train_rows)
                    .push_back(i);
            }
            if (test_rows.empty()) continue;
            Eigen::MatrixXd Xv;
            Eigen::VectorXd yv;
            const Eigen::MatrixXd block = data.layout.view_block(data.features, v);
            gather(block, data.outcome, train_rows, Xv, yv);
            require_trainable(yv, config.min_complete_rows, v);
            {
                bool has0 = false, has1 = false;
                for (Eigen::Index i = 0; i < yv.size(); ++i)
                    (yv[i] == 0.0 ? has0 : has1) = true;
                if (!has0 || !has1) throw FoldWithSingleClass();
            }
            const auto folds = make_folds(
                static_cast<int>(train_rows.size()), config.tuning_K, yv,
                splitmix64(config.base_seed ^
                           splitmix64(0x2000 + v * 4096 + k)));
            const auto tuned =
                cv_tune_auto(Xv, yv, PenaltyKind::RidgeL2, folds,
                             config.n_lambda, config.min_ratio_floor);
            Eigen::MatrixXd Xtest(test_rows.size(), block.cols());
            for (std::size_t r = 0; r < test_rows.size(); ++r)
                Xtest.row(r) = block.row(test_rows[r]);
            const Eigen::VectorXd p = predict_proba(tuned.model, Xtest);
            for (std::size_t r = 0; r < test_rows.size(); ++r)
                out.z(test_rows[r], v) = p[r];
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

PenalizedGlmModel fit_meta(const Eigen::MatrixXd& z_complete,
                           const Eigen::VectorXd& y,
                           const StaplrConfig& config) {
    if (!z_complete.allFinite() || (z_complete.array() < 0.0).any() ||
        (z_complete.array() > 1.0).any())
        throw NonFiniteInput("completed Z must lie in [0,1]");
    const auto folds =
        make_folds(static_cast<int>(y.size()), config.tuning_K, y,
                   splitmix64(config.base_seed ^ splitmix64(0x3000)));
    return cv_tune_auto(z_complete, y, PenaltyKind::NonnegativeLassoL1, folds,
                        config.n_lambda, config.min_ratio_floor)
        .model;
}

Eigen::VectorXd predict_stacked(const StackedModel& model,
                                const Eigen::MatrixXd& new_features) {
    if (new_features.cols() != model.layout.n_features())
        throw DimensionMismatch("feature count mismatch");
    const int V = model.layout.n_views();
    Eigen::MatrixXd z(new_features.rows(), V);
    for (int v = 0; v < V; ++v)
        z.col(v) = predict_proba(model.base_models[v],
                                 model.layout.view_block(new_features, v));
    return predict_proba(model.meta_model, z);
}

ViewSelection selected_views(const StackedModel& model) {
    ViewSelection s;
    const auto& c = model.meta_model.coefficients;
    s.selected.resize(c.size());
    for (Eigen::Index v = 0; v < c.size(); ++v) s.selected[v] = c[v] > 0.0;
    return s;
}

StackedModel fit_staplr(const MultiViewDataset& data, const StaplrConfig& config) {
    StackedModel model;
    model.layout = data.layout;
    model.base_models = fit_base_learners(data, config);
    const auto meta_folds = make_meta_folds(data, config);
    const auto zmat = build_z(data, meta_folds, config);
    if (zmat.missing.any())
        throw NonFiniteInput(
            "fit_staplr requires complete data; impute Z and call fit_meta");
    model.meta_model = fit_meta(zmat.z, data.outcome, config);
    return model;
}

}  // namespace staplr
