#include "staplr/simgen.hpp"

#include <cmath>
#include <fstream>

#include "staplr/rng.hpp"

namespace staplr {

namespace {

double sigmoid(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

// x_ij = sqrt(rho_b) g_i + sqrt(rho_w - rho_b) h_i^{v} + sqrt(1 - rho_w) e_ij
void sample_features(const SimConfig& cfg, const ViewLayout& layout, Rng& rng,
                     Eigen::MatrixXd& X) {
    const double a = std::sqrt(cfg.rho_between);
    const double b = std::sqrt(cfg.rho_within - cfg.rho_between);
    const double c = std::sqrt(1.0 - cfg.rho_within);
    const int V = layout.n_views();
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double g = rng.normal();
        for (int v = 0; v < V; ++v) {
            const double h = rng.normal();
            const int off = layout.offsets[v];
            for (int j = 0; j < layout.view_sizes[v]; ++j)
                X(i, off + j) = a * g + b * h + c * rng.normal();
        }
    }
}

Eigen::VectorXd bernoulli_outcomes(const Eigen::VectorXd& probs, Rng& rng) {
    Eigen::VectorXd y(probs.size());
    for (Eigen::Index i = 0; i < probs.size(); ++i)
        y[i] = rng.uniform() < probs[i] ? 1.0 : 0.0;
    return y;
}

}  // namespace

GeneratedData gen_dataset(const SimConfig& cfg) {
    if (cfg.rho_between < 0.0 || cfg.rho_between > cfg.rho_within ||
        cfg.rho_within >= 1.0)
        throw InvalidCorrelation("need 0 <= rho_between <= rho_within < 1");
    const ViewLayout layout = ViewLayout::from_sizes(cfg.view_sizes);
    const int V = layout.n_views();
    if (cfg.noise_view < 0 || cfg.noise_view >= V)
        throw DimensionMismatch("noise_view out of range");
    const int m = layout.n_features();

    const Rng root(cfg.seed);
    Rng coef_rng = root.derive(1);
    Rng train_rng = root.derive(2);
    Rng test_rng = root.derive(3);

    GeneratedData out;
    out.truth.coefficients.setZero(m);
    out.truth.signal_views.assign(V, true);
    out.truth.signal_views[cfg.noise_view] = false;
    for (int v = 0; v < V; ++v) {
        if (v == cfg.noise_view) continue;
        const double mag = 2.0 / std::sqrt(static_cast<double>(layout.view_sizes[v]));
        for (int j = 0; j < layout.view_sizes[v]; ++j)
            out.truth.coefficients[layout.offsets[v] + j] =
                coef_rng.uniform() < 0.5 ? mag : -mag;
    }

    auto make_split = [&](int n, Rng& rng, Eigen::VectorXd& probs) {
        MultiViewDataset d;
        d.layout = layout;
        d.features.resize(n, m);
        sample_features(cfg, layout, rng, d.features);
        Eigen::VectorXd eta = d.features * out.truth.coefficients;
        probs.resize(n);
        for (int i = 0; i < n; ++i) probs[i] = sigmoid(eta[i]);
        d.outcome = bernoulli_outcomes(probs, rng);
        d.view_missing = BoolMatrix::Constant(n, V, false);
        return d;
    };
    out.train = make_split(cfg.n_train, train_rng, out.truth.true_probabilities_train);
    out.test = make_split(cfg.n_test, test_rng, out.truth.true_probabilities_test);
    return out;
}

MissingnessPlan make_missingness_plan(int n, int target_view, double fraction,
                                      std::uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw FractionOutOfRange("fraction must lie strictly in (0,1)");
    MissingnessPlan plan;
    plan.target_view = target_view;
    plan.fraction = fraction;
    plan.seed = seed;
    const int k = static_cast<int>(std::llround(fraction * n));
    std::vector<int> rows(n);
    for (int i = 0; i < n; ++i) rows[i] = i;
    Rng rng(seed);
    for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(rng.uniform_below(n - i));
        std::swap(rows[i], rows[j]);
    }
    plan.affected_rows.assign(rows.begin(), rows.begin() + k);
    return plan;
}

MultiViewDataset inject_missingness(const MultiViewDataset& train,
                                    const MissingnessPlan& plan) {
    if (plan.target_view < 0 || plan.target_view >= train.layout.n_views())
        throw DimensionMismatch("target view out of range");
    if (plan.fraction <= 0.0 || plan.fraction >= 1.0)
        throw FractionOutOfRange();
    MultiViewDataset out = train;
    for (int i : plan.affected_rows) out.view_missing(i, plan.target_view) = true;
    return out;
}

void export_delimited(const MultiViewDataset& data, const std::string& prefix) {
    std::ofstream f(prefix + ".csv");
    const int V = data.layout.n_views();
    for (int v = 0; v < V; ++v)
        for (int j = 0; j < data.layout.view_sizes[v]; ++j)
            f << "view" << (v + 1) << "_f" << (j + 1) << ",";
    f << "y\n";
    f.precision(17);
    for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
        for (Eigen::Index j = 0; j < data.features.cols(); ++j)
            f << data.features(i, j) << ",";
        f << data.outcome[i] << "\n";
    }

    std::ofstream mask(prefix + ".mask.csv");
    for (int v = 0; v < V; ++v)
        mask << "view" << (v + 1) << (v + 1 < V ? "," : "\n");
    for (Eigen::Index i = 0; i < data.n_rows(); ++i)
        for (int v = 0; v < V; ++v)
            mask << (data.view_missing(i, v) ? 1 : 0) << (v + 1 < V ? "," : "\n");
}

}  // namespace staplr
