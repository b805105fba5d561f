#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "staplr/impute.hpp"
#include "staplr/metrics.hpp"
#include "staplr/simgen.hpp"
#include "staplr/stacking.hpp"

namespace staplr {

enum class ViewChoice { Smallest, Largest };

struct Condition {
    double missing_fraction = 0.5;  // 0.5 or 0.9 in the study grid
    ViewChoice missing_view = ViewChoice::Smallest;
    ViewChoice noise_view = ViewChoice::Smallest;
};

enum class MethodId { CDA, CCA, MI, MF, mMI, mMF, mPMM, cvPMM };

enum class Preset { Desk, Paper };

struct ExperimentRecord {
    Condition condition;
    MethodId method = MethodId::CDA;
    int rep = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error_tag;  // empty on success
    double accuracy = 0.0;
    double msep = 0.0;
    double deviance = 0.0;
    double prop_correct = 0.0;
    std::optional<double> tpr;
    std::optional<double> fpr;
    double fdr = 0.0;
    double log_seconds = 0.0;
};

struct MetricStats {
    double mean = 0.0;
    double sd = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    int n = 0;
};

struct SummaryRow {
    Condition condition;
    MethodId method = MethodId::CDA;
    int n_ok = 0;
    int n_failed = 0;
    MetricStats accuracy, msep, deviance, prop_correct, tpr, fpr, fdr,
        log_seconds;
};

struct GridConfig {
    std::vector<MethodId> methods;
    std::vector<Condition> conditions;
    int reps = 20;
    Preset preset = Preset::Desk;
    std::uint64_t master_seed = 0;
    int n_threads = 1;
    std::string out_path;  // non-empty: append records as jobs finish
};

std::string to_string(MethodId m);
MethodId method_from_string(const std::string& s);
std::string to_string(ViewChoice v);
ViewChoice view_choice_from_string(const std::string& s);

std::vector<Condition> all_conditions();
SimConfig preset_sim_config(Preset preset, const Condition& condition);

/// Every requested method on the same generated data and missingness plan.
std::vector<ExperimentRecord> run_condition_rep(
    const Condition& condition, const std::vector<MethodId>& methods, int rep,
    std::uint64_t master_seed, Preset preset, int n_threads = 1);

ExperimentRecord run_replication(const Condition& condition, MethodId method,
                                 int rep, std::uint64_t master_seed,
                                 Preset preset);

std::vector<ExperimentRecord> run_grid(const GridConfig& config);

std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records);

void write_records_csv(const std::string& path,
                       const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> read_records_csv(const std::string& path);
void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows);

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b);

struct AppendixAReport {
    double eps_small = 0.0;
    double eps_default = 0.0;  // resolved value of the relative default
    double ks_small = 0.0;
    double ks_default = 0.0;
    std::vector<double> imputed_small;    // 50 values
    std::vector<double> imputed_default;  // 50 values
    std::vector<double> observed;         // 150 values of feature 1
};

/// High-dimensional single-view PMM demo: n=200, m=400, first 50 values of
/// feature 1 missing; compares a small absolute stabilizer against the
/// relative default.
AppendixAReport appendix_a_demo(std::uint64_t seed,
                                double eps_small = 1e-5);

/// Key=value config file (# comments, blank lines ignored).
std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::string& path);

}  // namespace staplr
