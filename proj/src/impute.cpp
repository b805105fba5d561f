#include "staplr/impute.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "staplr/forest.hpp"
#include "staplr/rng.hpp"

namespace staplr {

namespace {

void check_shape(const IncompleteMatrix& m) {
    if (m.values.rows() != m.missing.rows() || m.values.cols() != m.missing.cols())
        throw DimensionMismatch("values and missing mask differ in shape");
    if (m.values.rows() == 0 || m.values.cols() == 0)
        throw EmptyInput("empty matrix");
    for (Eigen::Index j = 0; j < m.values.cols(); ++j)
        for (Eigen::Index i = 0; i < m.values.rows(); ++i)
            if (!m.missing(i, j) && !std::isfinite(m.values(i, j)))
                throw NonFiniteInput("observed cell is not finite");
}

/// Incomplete columns ordered by increasing missing count, index as tie-break.
std::vector<int> chained_order(const BoolMatrix& missing) {
    std::vector<std::pair<long, int>> counts;
    for (Eigen::Index j = 0; j < missing.cols(); ++j) {
        const long c = missing.col(j).count();
        if (c > 0) counts.emplace_back(c, static_cast<int>(j));
    }
    std::sort(counts.begin(), counts.end());
    std::vector<int> order;
    for (const auto& [c, j] : counts) order.push_back(j);
    return order;
}

Eigen::MatrixXd drop_column(const Eigen::MatrixXd& m, int col) {
    Eigen::MatrixXd out(m.rows(), m.cols() - 1);
    out.leftCols(col) = m.leftCols(col);
    out.rightCols(m.cols() - 1 - col) = m.rightCols(m.cols() - 1 - col);
    return out;
}

/// One Bayesian-ridge PMM pass over column t of the working matrix.
void pmm_column(Eigen::MatrixXd& work, const IncompleteMatrix& m, int t,
                double ridge_eps, int donors_d, Rng& rng) {
    const Eigen::Index n = work.rows();
    std::vector<Eigen::Index> obs, mis;
    for (Eigen::Index i = 0; i < n; ++i)
        (m.missing(i, t) ? mis : obs).push_back(i);
    if (mis.empty()) return;
    if (static_cast<int>(obs.size()) < donors_d)
        throw DonorPoolTooSmall("column " + std::to_string(t + 1) + " has " +
                                std::to_string(obs.size()) + " observed rows");

    const Eigen::MatrixXd others = drop_column(work, t);
    const Eigen::Index p = others.cols();

    Eigen::MatrixXd Xo(obs.size(), p);
    Eigen::VectorXd yo(obs.size());
    for (std::size_t r = 0; r < obs.size(); ++r) {
        Xo.row(r) = others.row(obs[r]);
        yo[r] = m.values(obs[r], t);
    }
    const Eigen::RowVectorXd xbar = Xo.colwise().mean();
    const double ybar = yo.mean();
    Xo.rowwise() -= xbar;
    yo.array() -= ybar;

    double eps = ridge_eps;
    if (eps <= 0.0)
        eps = 1e-5 * Xo.cwiseProduct(Xo).sum() / static_cast<double>(p);

    Eigen::MatrixXd A = Xo.transpose() * Xo;
    A.diagonal().array() += eps;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success)
        throw SingularDesign("stabilized normal equations not positive definite");

    const Eigen::VectorXd beta_hat = llt.solve(Xo.transpose() * yo);
    const double sse = (yo - Xo * beta_hat).squaredNorm();
    const Eigen::Index n_obs = static_cast<Eigen::Index>(obs.size());
    double scale;
    int df;
    if (n_obs > p) {
        scale = sse;
        df = static_cast<int>(n_obs - p);
    } else {
        // The flat-prior sigma^2 posterior is improper once the regression
        // interpolates (residual df <= 0). Fall back to a weakly-informative
        // inverse-chi-square prior anchored at the squared standard error of
        // the observed mean: enough to keep the draw proper without swamping
        // the stabilizer-controlled directions.
        const double n_d = static_cast<double>(n_obs);
        scale = yo.squaredNorm() / (n_d * n_d) + sse;
        df = static_cast<int>(n_obs) + 1;
    }
    const double sigma2 = scale / std::max(rng.chi_squared(df),
                                           std::numeric_limits<double>::min());

    Eigen::VectorXd zdraw(p);
    for (Eigen::Index j = 0; j < p; ++j) zdraw[j] = rng.normal();
    // beta* ~ N(beta_hat, sigma2 * A^{-1}); A = L L^T so A^{-1} = L^{-T} L^{-1}.
    const Eigen::VectorXd beta_star =
        beta_hat + std::sqrt(sigma2) *
                       llt.matrixU().solve(zdraw);

    // Donor predictions use the posterior mean, target predictions the draw.
    std::vector<double> donor_pred(obs.size());
    for (std::size_t r = 0; r < obs.size(); ++r)
        donor_pred[r] = ybar + (others.row(obs[r]) - xbar).dot(beta_hat);

    std::vector<std::pair<double, std::size_t>> ranked(obs.size());
    for (Eigen::Index i : mis) {
        const double target = ybar + (others.row(i) - xbar).dot(beta_star);
        for (std::size_t r = 0; r < obs.size(); ++r)
            ranked[r] = {std::abs(donor_pred[r] - target), r};
        std::partial_sort(ranked.begin(), ranked.begin() + donors_d,
                          ranked.end());
        const std::size_t pick =
            ranked[rng.uniform_below(donors_d)].second;
        work(i, t) = m.values(obs[pick], t);
    }
}

}  // namespace

Eigen::MatrixXd mean_impute(const IncompleteMatrix& m) {
    check_shape(m);
    Eigen::MatrixXd out = m.values;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        double sum = 0.0;
        long cnt = 0;
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            if (!m.missing(i, j)) {
                sum += out(i, j);
                ++cnt;
            }
        if (m.missing.col(j).any()) {
            if (cnt == 0)
                throw EmptyColumn("column " + std::to_string(j + 1) +
                                  " has no observed cells");
            const double mean = sum / cnt;
            for (Eigen::Index i = 0; i < out.rows(); ++i)
                if (m.missing(i, j)) out(i, j) = mean;
        }
    }
    return out;
}

std::vector<Eigen::MatrixXd> pmm_impute(const IncompleteMatrix& m,
                                        const ImputationSpec& spec) {
    check_shape(m);
    if (spec.donors_d < 1 || spec.n_imputations < 1)
        throw EmptyInput("donors_d and n_imputations must be >= 1");
    const auto order = chained_order(m.missing);
    const int n_chain = order.size() <= 1 ? 1 : 5;
    const Eigen::MatrixXd init = mean_impute(m);
    const Rng root(spec.seed);

    std::vector<Eigen::MatrixXd> out(spec.n_imputations);
    for (int imp = 0; imp < spec.n_imputations; ++imp) {
        Rng rng = root.derive(imp);
        Eigen::MatrixXd work = init;
        for (int sweep = 0; sweep < n_chain; ++sweep)
            for (int t : order)
                pmm_column(work, m, t, spec.ridge_eps, spec.donors_d, rng);
        out[imp] = std::move(work);
    }
    return out;
}

Eigen::MatrixXd missforest_impute(const IncompleteMatrix& m,
                                  const ImputationSpec& spec) {
    check_shape(m);
    const auto order = chained_order(m.missing);
    Eigen::MatrixXd work = mean_impute(m);
    if (order.empty()) return work;
    const Rng root(spec.seed);

    double prev_delta = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd prev = work;
    for (int iter = 0; iter < spec.max_iter; ++iter) {
        Eigen::MatrixXd next = work;
        for (std::size_t oi = 0; oi < order.size(); ++oi) {
            const int t = order[oi];
            std::vector<Eigen::Index> obs, mis;
            for (Eigen::Index i = 0; i < next.rows(); ++i)
                (m.missing(i, t) ? mis : obs).push_back(i);
            const Eigen::MatrixXd others = drop_column(next, t);
            Eigen::MatrixXd Xo(obs.size(), others.cols());
            Eigen::VectorXd yo(obs.size());
            for (std::size_t r = 0; r < obs.size(); ++r) {
                Xo.row(r) = others.row(obs[r]);
                yo[r] = m.values(obs[r], t);
            }
            ForestConfig fc;
            fc.n_trees = spec.n_trees;
            fc.seed = splitmix64(spec.seed ^
                                 splitmix64(0x7000 + iter * 1024 + oi));
            fc.n_threads = spec.n_threads;
            const auto forest = fit_forest(Xo, yo, fc);
            Eigen::MatrixXd Xm(mis.size(), others.cols());
            for (std::size_t r = 0; r < mis.size(); ++r)
                Xm.row(r) = others.row(mis[r]);
            const Eigen::VectorXd pred = predict_forest(forest, Xm);
            for (std::size_t r = 0; r < mis.size(); ++r)
                next(mis[r], t) = pred[r];
        }
        double num = 0.0, den = 0.0;
        for (int t : order)
            for (Eigen::Index i = 0; i < next.rows(); ++i)
                if (m.missing(i, t)) {
                    num += (next(i, t) - work(i, t)) * (next(i, t) - work(i, t));
                    den += next(i, t) * next(i, t);
                }
        const double delta = den > 0.0 ? num / den : 0.0;
        if (delta >= prev_delta) return work;
        prev = std::move(work);
        work = std::move(next);
        prev_delta = delta;
    }
    return work;
}

Eigen::MatrixXd complete_z(const CvPredictionMatrix& zmat,
                           const ImputationSpec& spec) {
    IncompleteMatrix m{zmat.z, zmat.missing};
    switch (spec.algorithm) {
        case ImputeAlgorithm::Mean:
            return mean_impute(m);
        case ImputeAlgorithm::MissForest:
            return missforest_impute(m, spec);
        case ImputeAlgorithm::Pmm: {
            const auto imps = pmm_impute(m, spec);
            Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(m.values.rows(),
                                                        m.values.cols());
            for (const auto& w : imps) avg += w;
            return avg / static_cast<double>(imps.size());
        }
    }
    throw UnsupportedImputation();
}

CompletedZ impute_meta(const MultiViewDataset& data, const ImputationSpec& spec,
                       const StaplrConfig& config,
                       const CvPredictionMatrix* prebuilt_z) {
    if (spec.level != ImputeLevel::Meta)
        throw UnsupportedImputation("impute_meta requires a meta-level spec");

    CompletedZ out;
    const bool cv_pmm = spec.algorithm == ImputeAlgorithm::Pmm &&
                        spec.pmm_strategy == PmmStrategy::MultiZ_cvPMM;
    if (!cv_pmm) {
        const CvPredictionMatrix zmat =
            prebuilt_z ? *prebuilt_z
                       : build_z(data, make_meta_folds(data, config), config);
        out.z = complete_z(zmat, spec);
        out.imputed_cells = zmat.missing;
        out.n_z_builds = 1;
        out.fold_seeds = {config.fold_seed};
        return out;
    }

    // cvPMM: independent Z builds, one PMM draw each, cellwise average. The
    // first build reuses the configured fold seed so it matches the single-Z
    // methods exactly.
    Eigen::MatrixXd avg;
    for (int k = 0; k < spec.n_imputations; ++k) {
        StaplrConfig cfg_k = config;
        if (k > 0)
            cfg_k.fold_seed =
                splitmix64(config.fold_seed ^ splitmix64(0x5000 + k));
        const CvPredictionMatrix zmat =
            (k == 0 && prebuilt_z)
                ? *prebuilt_z
                : build_z(data,
                          make_folds(static_cast<int>(data.n_rows()),
                                     cfg_k.meta_K, data.outcome,
                                     cfg_k.fold_seed),
                          cfg_k);
        ImputationSpec one = spec;
        one.n_imputations = 1;
        one.seed = splitmix64(spec.seed ^ splitmix64(0x6000 + k));
        const auto imp = pmm_impute({zmat.z, zmat.missing}, one);
        if (k == 0) {
            avg = imp[0];
            out.imputed_cells = zmat.missing;
        } else {
            avg += imp[0];
        }
        out.fold_seeds.push_back(cfg_k.fold_seed);
        ++out.n_z_builds;
    }
    out.z = avg / static_cast<double>(spec.n_imputations);
    return out;
}

MultiViewDataset impute_features(const MultiViewDataset& data,
                                 const ImputationSpec& spec) {
    if (spec.level != ImputeLevel::Feature)
        throw UnsupportedImputation("impute_features requires a feature-level spec");
    if (spec.algorithm == ImputeAlgorithm::Pmm && !spec.allow_feature_pmm)
        throw UnsupportedImputation("feature-level PMM is disabled");

    IncompleteMatrix m;
    m.values = data.features;
    m.missing = BoolMatrix::Constant(data.features.rows(), data.features.cols(),
                                     false);
    for (int v = 0; v < data.layout.n_views(); ++v)
        for (Eigen::Index i = 0; i < data.n_rows(); ++i)
            if (data.view_missing(i, v))
                for (int j = 0; j < data.layout.view_sizes[v]; ++j)
                    m.missing(i, data.layout.offsets[v] + j) = true;

    MultiViewDataset out = data;
    switch (spec.algorithm) {
        case ImputeAlgorithm::Mean:
            out.features = mean_impute(m);
            break;
        case ImputeAlgorithm::MissForest:
            out.features = missforest_impute(m, spec);
            break;
        case ImputeAlgorithm::Pmm: {
            const auto imps = pmm_impute(m, spec);
            Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(m.values.rows(),
                                                        m.values.cols());
            for (const auto& w : imps) avg += w;
            out.features = avg / static_cast<double>(imps.size());
            break;
        }
    }
    out.view_missing.setConstant(false);
    return out;
}

MultiViewDataset complete_cases(const MultiViewDataset& data) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < data.n_rows(); ++i)
        if (data.row_complete(i)) keep.push_back(i);
    if (keep.empty()) throw NoCompleteCases();

    MultiViewDataset out;
    out.layout = data.layout;
    out.features.resize(keep.size(), data.features.cols());
    out.outcome.resize(keep.size());
    out.view_missing =
        BoolMatrix::Constant(keep.size(), data.layout.n_views(), false);
    bool has0 = false, has1 = false;
    for (std::size_t r = 0; r < keep.size(); ++r) {
        out.features.row(r) = data.features.row(keep[r]);
        out.outcome[r] = data.outcome[keep[r]];
        (out.outcome[r] == 0.0 ? has0 : has1) = true;
    }
    if (!has0 || !has1)
        throw NoCompleteCases("complete cases contain a single class");
    return out;
}

}  // namespace staplr
