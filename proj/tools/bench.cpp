// Serial vs parallel timing for the OpenMP kernels (forest fitting and
// out-of-fold prediction-matrix construction), with an equality check so the
// parallel path is validated against the serial reference on every run.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "staplr/forest.hpp"
#include "staplr/rng.hpp"
#include "staplr/simgen.hpp"
#include "staplr/stacking.hpp"

using namespace staplr;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void bench_forest(int threads) {
    const int n = 400, p = 50;
    Rng rng(7);
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
        y[i] = X(i, 0) + 0.5 * X(i, 1) * X(i, 2) + 0.1 * rng.normal();
    }

    ForestConfig cfg;
    cfg.seed = 99;
    cfg.n_threads = 1;
    auto t0 = Clock::now();
    const auto serial = fit_forest(X, y, cfg);
    const double t_serial = seconds_since(t0);

    cfg.n_threads = threads;
    t0 = Clock::now();
    const auto parallel = fit_forest(X, y, cfg);
    const double t_parallel = seconds_since(t0);

    const Eigen::VectorXd ps = predict_forest(serial, X);
    const Eigen::VectorXd pp = predict_forest(parallel, X);
    const bool same = (ps - pp).cwiseAbs().maxCoeff() == 0.0;

    std::printf("forest   n=%d p=%d trees=%d | serial %.3fs | %d threads %.3fs"
                " | speedup %.2fx | identical: %s\n",
                n, p, cfg.n_trees, t_serial, threads, t_parallel,
                t_serial / t_parallel, same ? "yes" : "NO");
}

void bench_build_z(int threads) {
    SimConfig sc = SimConfig::desk_scale();
    sc.seed = 11;
    const auto data = gen_dataset(sc);

    StaplrConfig cfg;
    cfg.tuning_K = 5;
    cfg.n_lambda = 15;
    cfg.min_ratio_floor = 1e-3;
    cfg.base_seed = 21;
    cfg.fold_seed = 22;

    const auto folds = make_meta_folds(data.train, cfg);

    cfg.n_threads = 1;
    auto t0 = Clock::now();
    const auto zs = build_z(data.train, folds, cfg);
    const double t_serial = seconds_since(t0);

    cfg.n_threads = threads;
    t0 = Clock::now();
    const auto zp = build_z(data.train, folds, cfg);
    const double t_parallel = seconds_since(t0);

    const bool same = (zs.z - zp.z).cwiseAbs().maxCoeff() == 0.0;
    std::printf("build_z  n=%d V=%zu folds=%d | serial %.3fs | %d threads %.3fs"
                " | speedup %.2fx | identical: %s\n",
                sc.n_train, sc.view_sizes.size(), cfg.meta_K, t_serial, threads,
                t_parallel, t_serial / t_parallel, same ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
    const int threads = argc > 1 ? std::atoi(argv[1]) : 4;
    std::printf("comparing serial reference against %d-thread kernels\n",
                threads);
    bench_forest(threads);
    bench_build_z(threads);
    return 0;
}
