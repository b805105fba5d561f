#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>

#include "staplr/simgen.hpp"

using namespace staplr;

namespace {

// Mean empirical correlation within and across view blocks.
void mean_correlations(const MultiViewDataset& d, double& within, double& between) {
    const auto n = d.features.rows();
    Eigen::MatrixXd C = d.features;
    Eigen::RowVectorXd mean = C.colwise().mean();
    C.rowwise() -= mean;
    Eigen::RowVectorXd sd = (C.colwise().squaredNorm() / double(n)).cwiseSqrt();
    for (Eigen::Index j = 0; j < C.cols(); ++j) C.col(j) /= sd[j];
    Eigen::MatrixXd R = C.transpose() * C / double(n);

    double sw = 0, sb = 0;
    long cw = 0, cb = 0;
    const int V = d.layout.n_views();
    for (int v = 0; v < V; ++v)
        for (int w = v; w < V; ++w) {
            const int ov = d.layout.offsets[v], ow = d.layout.offsets[w];
            for (int a = 0; a < d.layout.view_sizes[v]; ++a)
                for (int b = 0; b < d.layout.view_sizes[w]; ++b) {
                    if (v == w && a >= b) continue;
                    if (v == w) {
                        sw += R(ov + a, ow + b);
                        ++cw;
                    } else {
                        sb += R(ov + a, ow + b);
                        ++cb;
                    }
                }
        }
    within = sw / cw;
    between = sb / cb;
}

}  // namespace

TEST_CASE("independence limit: zero correlations give near-zero empirical r") {
    SimConfig cfg;
    cfg.n_train = 1000;
    cfg.n_test = 10;
    cfg.view_sizes = {3, 4, 5};
    cfg.rho_within = 0.0;
    cfg.rho_between = 0.0;
    cfg.noise_view = 0;
    cfg.seed = 5;
    const auto data = gen_dataset(cfg);
    double within, between;
    mean_correlations(data.train, within, between);
    CHECK(std::abs(within) < 0.1);
    CHECK(std::abs(between) < 0.1);
}

TEST_CASE("paper correlation structure is reproduced empirically") {
    SimConfig cfg = SimConfig::desk_scale();
    cfg.n_train = 1000;
    cfg.n_test = 10;
    cfg.noise_view = 3;
    cfg.seed = 11;
    const auto data = gen_dataset(cfg);
    double within, between;
    mean_correlations(data.train, within, between);
    CHECK(within > 0.45);
    CHECK(within < 0.55);
    CHECK(between > 0.15);
    CHECK(between < 0.25);
}

TEST_CASE("noise view coefficients are exactly zero, others +-2/sqrt(m_v)") {
    SimConfig cfg;
    cfg.n_train = 50;
    cfg.n_test = 10;
    cfg.view_sizes = {2, 3, 4};
    cfg.noise_view = 2;
    const auto data = gen_dataset(cfg);
    const auto& beta = data.truth.coefficients;
    for (int j = 0; j < 2; ++j)
        CHECK(std::abs(beta[j]) == doctest::Approx(2.0 / std::sqrt(2.0)));
    for (int j = 2; j < 5; ++j)
        CHECK(std::abs(beta[j]) == doctest::Approx(2.0 / std::sqrt(3.0)));
    for (int j = 5; j < 9; ++j) CHECK(beta[j] == 0.0);
    CHECK(data.truth.signal_views == std::vector<bool>{true, true, false});

    for (int i = 0; i < 50; ++i) {
        CHECK(data.truth.true_probabilities_train[i] > 0.0);
        CHECK(data.truth.true_probabilities_train[i] < 1.0);
    }
}

TEST_CASE("reproducibility: same config gives bit-identical datasets") {
    SimConfig cfg;
    cfg.n_train = 30;
    cfg.n_test = 20;
    cfg.view_sizes = {3, 3};
    cfg.noise_view = 1;
    cfg.seed = 77;
    const auto a = gen_dataset(cfg);
    const auto b = gen_dataset(cfg);
    CHECK((a.train.features.array() == b.train.features.array()).all());
    CHECK((a.test.features.array() == b.test.features.array()).all());
    CHECK((a.train.outcome.array() == b.train.outcome.array()).all());
}

TEST_CASE("correlation validation") {
    SimConfig cfg;
    cfg.view_sizes = {2, 2};
    cfg.rho_within = 0.2;
    cfg.rho_between = 0.5;  // rho_b > rho_w
    CHECK_THROWS_AS(gen_dataset(cfg), InvalidCorrelation);
    cfg.rho_within = 1.0;
    cfg.rho_between = 0.2;
    CHECK_THROWS_AS(gen_dataset(cfg), InvalidCorrelation);
}

TEST_CASE("missingness injection: counts, MCAR, validation") {
    const auto plan900 = make_missingness_plan(1000, 0, 0.9, 1);
    CHECK(plan900.affected_rows.size() == 900);

    const auto plan5 = make_missingness_plan(10, 0, 0.5, 1);
    CHECK(plan5.affected_rows.size() == 5);

    CHECK_THROWS_AS(make_missingness_plan(10, 0, 1.5, 1), FractionOutOfRange);

    SimConfig cfg;
    cfg.n_train = 1000;
    cfg.n_test = 10;
    cfg.view_sizes = {3, 3};
    cfg.noise_view = 1;
    cfg.seed = 3;
    const auto data = gen_dataset(cfg);

    // Outcome mean among affected rows stays near the overall mean (MCAR).
    int within_3se = 0;
    const int n_seeds = 30;
    for (int seed = 0; seed < n_seeds; ++seed) {
        const auto plan = make_missingness_plan(1000, 0, 0.5, 100 + seed);
        const auto masked = inject_missingness(data.train, plan);
        double m = 0;
        for (int i : plan.affected_rows) m += data.train.outcome[i];
        m /= plan.affected_rows.size();
        const double overall = data.train.outcome.mean();
        const double se = std::sqrt(overall * (1 - overall) / 500.0);
        if (std::abs(m - overall) < 3 * se) ++within_3se;

        // only the target view's mask toggles, only for affected rows
        int flagged = 0;
        for (int i = 0; i < 1000; ++i) {
            CHECK(!masked.view_missing(i, 1));
            if (masked.view_missing(i, 0)) ++flagged;
        }
        CHECK(flagged == 500);
        CHECK((masked.features.array() == data.train.features.array()).all());
    }
    CHECK(within_3se >= n_seeds - 2);
}

TEST_CASE("delimited export writes features, outcome and mask") {
    SimConfig cfg;
    cfg.n_train = 4;
    cfg.n_test = 2;
    cfg.view_sizes = {2, 1};
    cfg.noise_view = 1;
    const auto data = gen_dataset(cfg);
    const std::string prefix = "/tmp/staplr_export_test";
    export_delimited(data.train, prefix);

    std::ifstream f(prefix + ".csv");
    std::string header;
    std::getline(f, header);
    CHECK(header == "view1_f1,view1_f2,view2_f1,y");
    int rows = 0;
    std::string line;
    while (std::getline(f, line)) ++rows;
    CHECK(rows == 4);
    std::remove((prefix + ".csv").c_str());
    std::remove((prefix + ".mask.csv").c_str());
}
