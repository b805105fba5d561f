#pragma once

#include <cstdint>
#include <vector>

#include "staplr/multiview.hpp"
#include "staplr/stacking.hpp"

namespace staplr {

enum class ImputeAlgorithm { Mean, Pmm, MissForest };
enum class ImputeLevel { Feature, Meta };
enum class PmmStrategy { SingleZ_mPMM, MultiZ_cvPMM };

struct ImputationSpec {
    ImputeAlgorithm algorithm = ImputeAlgorithm::Mean;
    ImputeLevel level = ImputeLevel::Meta;
    int n_imputations = 5;  // PMM
    int donors_d = 5;       // PMM
    PmmStrategy pmm_strategy = PmmStrategy::SingleZ_mPMM;
    int n_trees = 100;   // missForest
    int max_iter = 10;   // missForest
    double ridge_eps = 0.0;  // PMM stabilizer; <= 0 means 1e-5 * trace(X'X)/p
    std::uint64_t seed = 0;
    int n_threads = 1;
    bool allow_feature_pmm = false;  // only the stabilizer demo sets this
};

struct IncompleteMatrix {
    Eigen::MatrixXd values;
    BoolMatrix missing;
};

/// Completed meta matrix plus how it was produced.
struct CompletedZ {
    Eigen::MatrixXd z;
    BoolMatrix imputed_cells;  // cells that were imputation targets
    int n_z_builds = 0;
    std::vector<std::uint64_t> fold_seeds;
};

Eigen::MatrixXd mean_impute(const IncompleteMatrix& m);

/// One matrix per imputation; every imputed value is copied from an observed
/// value of its column (donor matching on Bayesian ridge predictions).
std::vector<Eigen::MatrixXd> pmm_impute(const IncompleteMatrix& m,
                                        const ImputationSpec& spec);

Eigen::MatrixXd missforest_impute(const IncompleteMatrix& m,
                                  const ImputationSpec& spec);

/// Apply spec's algorithm to an already-built Z (Mean / MissForest directly;
/// PMM as the average of n_imputations draws).
Eigen::MatrixXd complete_z(const CvPredictionMatrix& zmat,
                           const ImputationSpec& spec);

/// Meta-level orchestration: build Z (or reuse prebuilt_z), impute. cvPMM
/// rebuilds Z n_imputations times with independent fold seeds (the first
/// build uses config.fold_seed itself) and averages one imputation of each.
CompletedZ impute_meta(const MultiViewDataset& data, const ImputationSpec& spec,
                       const StaplrConfig& config,
                       const CvPredictionMatrix* prebuilt_z = nullptr);

/// Feature-level imputation over the concatenated views; returns a dataset
/// with an all-false missingness mask.
MultiViewDataset impute_features(const MultiViewDataset& data,
                                 const ImputationSpec& spec);

MultiViewDataset complete_cases(const MultiViewDataset& data);

}  // namespace staplr
