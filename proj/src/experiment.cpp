#include "staplr/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "staplr/rng.hpp"

namespace staplr {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int pick_view(ViewChoice c, int n_views) {
    return c == ViewChoice::Smallest ? 0 : n_views - 1;
}

/// Tuning budget per preset. The desk profile trims the cross-validation
/// budget (fewer tuning folds, shorter lambda grids, raised grid floor) so a
/// replication finishes in about a minute on one core; the ridge CV optima
/// stay well inside the trimmed grids.
StaplrConfig staplr_profile(Preset preset) {
    StaplrConfig cfg;
    if (preset == Preset::Desk) {
        cfg.tuning_K = 5;
        cfg.n_lambda = 15;
        cfg.min_ratio_floor = 1e-3;
    }
    return cfg;
}

/// Expensive stages shared by every meta-level method within a replication.
struct SharedStages {
    bool ready = false;
    std::string error_tag;  // non-empty: stage failed, reuse the tag
    std::vector<PenalizedGlmModel> base_models;
    CvPredictionMatrix zmat;
    double seconds_base = 0.0;
    double seconds_z = 0.0;
};

void ensure_shared(SharedStages& s, const MultiViewDataset& masked,
                   const StaplrConfig& cfg) {
    if (s.ready || !s.error_tag.empty()) return;
    try {
        auto t0 = Clock::now();
        s.base_models = fit_base_learners(masked, cfg);
        s.seconds_base = elapsed(t0);
        t0 = Clock::now();
        s.zmat = build_z(masked, make_meta_folds(masked, cfg), cfg);
        s.seconds_z = elapsed(t0);
        s.ready = true;
    } catch (const Error& e) {
        s.error_tag = e.tag();
    } catch (const std::exception&) {
        s.error_tag = "Unknown";
    }
}

void evaluate(ExperimentRecord& rec, const StackedModel& model,
              const MultiViewDataset& test, const GroundTruth& truth,
              double seconds) {
    const Eigen::VectorXd p = predict_stacked(model, test.features);
    rec.accuracy = accuracy(p, test.outcome);
    rec.msep = msep(p, truth.true_probabilities_test);
    rec.deviance = deviance(p, test.outcome);
    const auto sel = selection_eval(selected_views(model).selected,
                                    truth.signal_views);
    rec.prop_correct = sel.proportion_correct;
    rec.tpr = sel.tpr;
    rec.fpr = sel.fpr;
    rec.fdr = sel.fdr;
    rec.log_seconds = log_runtime(seconds);
    rec.ok = true;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

void write_record_line(std::ostream& os, const ExperimentRecord& r) {
    os << fmt(r.condition.missing_fraction) << ','
       << to_string(r.condition.missing_view) << ','
       << to_string(r.condition.noise_view) << ',' << to_string(r.method) << ','
       << r.rep << ',' << r.seed << ',';
    if (r.ok) {
        os << fmt(r.accuracy) << ',' << fmt(r.msep) << ',' << fmt(r.deviance)
           << ',' << fmt(r.prop_correct) << ','
           << (r.tpr ? fmt(*r.tpr) : std::string()) << ','
           << (r.fpr ? fmt(*r.fpr) : std::string()) << ',' << fmt(r.fdr) << ','
           << fmt(r.log_seconds) << ",ok,";
    } else {
        os << ",,,,,,,,failed," << r.error_tag;
    }
    os << '\n';
}

constexpr const char* kRecordHeader =
    "condition_fraction,condition_missing_view,condition_noise_view,method,"
    "rep,seed,accuracy,msep,deviance,prop_correct,tpr,fpr,fdr,log_seconds,"
    "status,error_tag";

MetricStats stats_of(std::vector<double> v) {
    MetricStats s;
    s.n = static_cast<int>(v.size());
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());  // record order must not affect the stats
    double sum = 0;
    for (double x : v) sum += x;
    s.mean = sum / s.n;
    double ss = 0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = s.n > 1 ? std::sqrt(ss / (s.n - 1)) : 0.0;
    auto quantile = [&](double p) {
        const double h = (v.size() - 1) * p;
        const std::size_t lo = static_cast<std::size_t>(h);
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (h - lo) * (v[hi] - v[lo]);
    };
    s.q25 = quantile(0.25);
    s.median = quantile(0.5);
    s.q75 = quantile(0.75);
    return s;
}

int method_rank(MethodId m) { return static_cast<int>(m); }

bool condition_less(const Condition& a, const Condition& b) {
    if (a.missing_fraction != b.missing_fraction)
        return a.missing_fraction < b.missing_fraction;
    if (a.missing_view != b.missing_view)
        return a.missing_view < b.missing_view;
    return a.noise_view < b.noise_view;
}

bool same_condition(const Condition& a, const Condition& b) {
    return a.missing_fraction == b.missing_fraction &&
           a.missing_view == b.missing_view && a.noise_view == b.noise_view;
}

}  // namespace

std::string to_string(MethodId m) {
    switch (m) {
        case MethodId::CDA: return "CDA";
        case MethodId::CCA: return "CCA";
        case MethodId::MI: return "MI";
        case MethodId::MF: return "MF";
        case MethodId::mMI: return "mMI";
        case MethodId::mMF: return "mMF";
        case MethodId::mPMM: return "mPMM";
        case MethodId::cvPMM: return "cvPMM";
    }
    return "?";
}

MethodId method_from_string(const std::string& s) {
    for (int i = 0; i < 8; ++i)
        if (to_string(static_cast<MethodId>(i)) == s)
            return static_cast<MethodId>(i);
    throw EmptyInput("unknown method: " + s);
}

std::string to_string(ViewChoice v) {
    return v == ViewChoice::Smallest ? "smallest" : "largest";
}

ViewChoice view_choice_from_string(const std::string& s) {
    if (s == "smallest") return ViewChoice::Smallest;
    if (s == "largest") return ViewChoice::Largest;
    throw EmptyInput("unknown view choice: " + s);
}

std::vector<Condition> all_conditions() {
    std::vector<Condition> out;
    for (double f : {0.5, 0.9})
        for (ViewChoice mv : {ViewChoice::Smallest, ViewChoice::Largest})
            for (ViewChoice nv : {ViewChoice::Smallest, ViewChoice::Largest})
                out.push_back({f, mv, nv});
    return out;
}

SimConfig preset_sim_config(Preset preset, const Condition& condition) {
    SimConfig sc = preset == Preset::Paper ? SimConfig::paper_scale()
                                          : SimConfig::desk_scale();
    sc.noise_view =
        pick_view(condition.noise_view, static_cast<int>(sc.view_sizes.size()));
    return sc;
}

std::vector<ExperimentRecord> run_condition_rep(
    const Condition& condition, const std::vector<MethodId>& methods, int rep,
    std::uint64_t master_seed, Preset preset, int n_threads) {
    const std::uint64_t rep_seed =
        splitmix64(master_seed ^ splitmix64(0xA000 + rep));

    SimConfig sc = preset_sim_config(preset, condition);
    sc.seed = splitmix64(rep_seed ^ splitmix64(1));
    const GeneratedData data = gen_dataset(sc);
    const int V = static_cast<int>(sc.view_sizes.size());

    const auto plan = make_missingness_plan(
        sc.n_train, pick_view(condition.missing_view, V),
        condition.missing_fraction, splitmix64(rep_seed ^ splitmix64(2)));
    const MultiViewDataset masked = inject_missingness(data.train, plan);

    StaplrConfig cfg = staplr_profile(preset);
    cfg.base_seed = splitmix64(rep_seed ^ splitmix64(3));
    cfg.fold_seed = splitmix64(rep_seed ^ splitmix64(4));
    cfg.n_threads = n_threads;

    SharedStages shared;
    std::vector<ExperimentRecord> out;
    for (MethodId method : methods) {
        ExperimentRecord rec;
        rec.condition = condition;
        rec.method = method;
        rec.rep = rep;
        rec.seed = rep_seed;

        ImputationSpec spec;
        spec.seed = splitmix64(rep_seed ^
                               splitmix64(0xB000 + method_rank(method)));
        spec.n_threads = n_threads;

        try {
            switch (method) {
                case MethodId::CDA: {
                    const auto t0 = Clock::now();
                    const auto model = fit_staplr(data.train, cfg);
                    evaluate(rec, model, data.test, data.truth, elapsed(t0));
                    break;
                }
                case MethodId::CCA: {
                    const auto t0 = Clock::now();
                    const auto cc = complete_cases(masked);
                    const auto model = fit_staplr(cc, cfg);
                    evaluate(rec, model, data.test, data.truth, elapsed(t0));
                    break;
                }
                case MethodId::MI:
                case MethodId::MF: {
                    spec.level = ImputeLevel::Feature;
                    spec.algorithm = method == MethodId::MI
                                         ? ImputeAlgorithm::Mean
                                         : ImputeAlgorithm::MissForest;
                    const auto t0 = Clock::now();
                    const auto completed = impute_features(masked, spec);
                    const auto model = fit_staplr(completed, cfg);
                    evaluate(rec, model, data.test, data.truth, elapsed(t0));
                    break;
                }
                case MethodId::mMI:
                case MethodId::mMF:
                case MethodId::mPMM:
                case MethodId::cvPMM: {
                    ensure_shared(shared, masked, cfg);
                    if (!shared.error_tag.empty()) {
                        rec.error_tag = shared.error_tag;
                        break;
                    }
                    spec.level = ImputeLevel::Meta;
                    if (method == MethodId::mMI)
                        spec.algorithm = ImputeAlgorithm::Mean;
                    else if (method == MethodId::mMF)
                        spec.algorithm = ImputeAlgorithm::MissForest;
                    else
                        spec.algorithm = ImputeAlgorithm::Pmm;
                    if (method == MethodId::cvPMM)
                        spec.pmm_strategy = PmmStrategy::MultiZ_cvPMM;
                    // The base-learner and first-Z stages are computed once
                    // per replication; their measured durations are added to
                    // every meta method's own imputation + meta-fit time.
                    const auto t0 = Clock::now();
                    const auto cz = impute_meta(masked, spec, cfg, &shared.zmat);
                    StackedModel model;
                    model.layout = masked.layout;
                    model.base_models = shared.base_models;
                    model.meta_model = fit_meta(cz.z, masked.outcome, cfg);
                    evaluate(rec, model, data.test, data.truth,
                             shared.seconds_base + shared.seconds_z +
                                 elapsed(t0));
                    break;
                }
            }
        } catch (const Error& e) {
            rec.ok = false;
            rec.error_tag = e.tag();
        } catch (const std::exception&) {
            rec.ok = false;
            rec.error_tag = "Unknown";
        }
        out.push_back(std::move(rec));
    }
    return out;
}

ExperimentRecord run_replication(const Condition& condition, MethodId method,
                                 int rep, std::uint64_t master_seed,
                                 Preset preset) {
    return run_condition_rep(condition, {method}, rep, master_seed, preset)[0];
}

std::vector<ExperimentRecord> run_grid(const GridConfig& config) {
    if (config.reps < 1) throw EmptyInput("reps must be >= 1");
    if (config.methods.empty() || config.conditions.empty())
        throw EmptyInput("methods and conditions must be non-empty");

    const int n_jobs = static_cast<int>(config.conditions.size()) * config.reps;
    const int per_job = static_cast<int>(config.methods.size());
    std::vector<ExperimentRecord> records(
        static_cast<std::size_t>(n_jobs) * per_job);

    std::ofstream partial;
    if (!config.out_path.empty()) {
        partial.open(config.out_path, std::ios::trunc);
        partial << kRecordHeader << '\n';
    }

#pragma omp parallel for schedule(dynamic) num_threads(config.n_threads)
    for (int job = 0; job < n_jobs; ++job) {
        const int ci = job / config.reps;
        const int rep = job % config.reps;
        auto batch = run_condition_rep(config.conditions[ci], config.methods,
                                       rep, config.master_seed, config.preset);
#pragma omp critical
        {
            if (partial.is_open()) {
                for (const auto& r : batch) write_record_line(partial, r);
                partial.flush();
            }
            for (int k = 0; k < per_job; ++k)
                records[static_cast<std::size_t>(job) * per_job + k] =
                    std::move(batch[k]);
        }
    }

    if (!config.out_path.empty()) {
        partial.close();
        write_records_csv(config.out_path, records);  // deterministic order
    }
    return records;
}

std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records) {
    if (records.empty()) throw EmptyInput("no records to summarize");

    std::vector<std::pair<Condition, MethodId>> keys;
    for (const auto& r : records) {
        bool found = false;
        for (const auto& [c, m] : keys)
            if (same_condition(c, r.condition) && m == r.method) found = true;
        if (!found) keys.emplace_back(r.condition, r.method);
    }
    std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
        if (!same_condition(a.first, b.first))
            return condition_less(a.first, b.first);
        return method_rank(a.second) < method_rank(b.second);
    });

    std::vector<SummaryRow> rows;
    for (const auto& [cond, method] : keys) {
        SummaryRow row;
        row.condition = cond;
        row.method = method;
        std::vector<double> acc, ms, dev, pc, tp, fp, fd, ls;
        for (const auto& r : records) {
            if (!same_condition(r.condition, cond) || r.method != method)
                continue;
            if (!r.ok) {
                ++row.n_failed;
                continue;
            }
            ++row.n_ok;
            acc.push_back(r.accuracy);
            ms.push_back(r.msep);
            dev.push_back(r.deviance);
            pc.push_back(r.prop_correct);
            if (r.tpr) tp.push_back(*r.tpr);
            if (r.fpr) fp.push_back(*r.fpr);
            fd.push_back(r.fdr);
            ls.push_back(r.log_seconds);
        }
        row.accuracy = stats_of(std::move(acc));
        row.msep = stats_of(std::move(ms));
        row.deviance = stats_of(std::move(dev));
        row.prop_correct = stats_of(std::move(pc));
        row.tpr = stats_of(std::move(tp));
        row.fpr = stats_of(std::move(fp));
        row.fdr = stats_of(std::move(fd));
        row.log_seconds = stats_of(std::move(ls));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_records_csv(const std::string& path,
                       const std::vector<ExperimentRecord>& records) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw EmptyInput("cannot open " + path);
    os << kRecordHeader << '\n';
    for (const auto& r : records) write_record_line(os, r);
}

std::vector<ExperimentRecord> read_records_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw EmptyInput("cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw EmptyInput("empty file: " + path);
    if (split_csv_line(line).size() != 16)
        throw EmptyInput("unexpected header in " + path);

    std::vector<ExperimentRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 16) throw EmptyInput("malformed row in " + path);
        ExperimentRecord r;
        r.condition.missing_fraction = std::stod(f[0]);
        r.condition.missing_view = view_choice_from_string(f[1]);
        r.condition.noise_view = view_choice_from_string(f[2]);
        r.method = method_from_string(f[3]);
        r.rep = std::stoi(f[4]);
        r.seed = std::stoull(f[5]);
        r.ok = f[14] == "ok";
        if (r.ok) {
            r.accuracy = std::stod(f[6]);
            r.msep = std::stod(f[7]);
            r.deviance = std::stod(f[8]);
            r.prop_correct = std::stod(f[9]);
            if (!f[10].empty()) r.tpr = std::stod(f[10]);
            if (!f[11].empty()) r.fpr = std::stod(f[11]);
            r.fdr = std::stod(f[12]);
            r.log_seconds = std::stod(f[13]);
        } else {
            r.error_tag = f[15];
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw EmptyInput("cannot open " + path);
    os << "condition_fraction,condition_missing_view,condition_noise_view,"
          "method,n_ok,n_failed";
    for (const char* m : {"accuracy", "msep", "deviance", "prop_correct",
                          "tpr", "fpr", "fdr", "log_seconds"})
        os << ',' << m << "_mean," << m << "_sd," << m << "_q25," << m
           << "_median," << m << "_q75";
    os << '\n';
    for (const auto& row : rows) {
        os << fmt(row.condition.missing_fraction) << ','
           << to_string(row.condition.missing_view) << ','
           << to_string(row.condition.noise_view) << ','
           << to_string(row.method) << ',' << row.n_ok << ',' << row.n_failed;
        for (const MetricStats* s :
             {&row.accuracy, &row.msep, &row.deviance, &row.prop_correct,
              &row.tpr, &row.fpr, &row.fdr, &row.log_seconds})
            os << ',' << fmt(s->mean) << ',' << fmt(s->sd) << ',' << fmt(s->q25)
               << ',' << fmt(s->median) << ',' << fmt(s->q75);
        os << '\n';
    }
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw EmptyInput("KS needs non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                                 static_cast<double>(j) / b.size()));
    }
    return d;
}

AppendixAReport appendix_a_demo(std::uint64_t seed, double eps_small) {
    const int n = 200, m = 400, n_miss = 50;
    Rng root(seed);
    Rng feat = root.derive(1);
    Rng outc = root.derive(2);

    Eigen::MatrixXd X(n, m + 1);  // outcome appended as a predictor column
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) X(i, j) = feat.normal();
    for (int i = 0; i < n; ++i) X(i, m) = outc.uniform() < 0.5 ? 1.0 : 0.0;

    IncompleteMatrix inc;
    inc.values = X;
    inc.missing = BoolMatrix::Constant(n, m + 1, false);
    for (int i = 0; i < n_miss; ++i) inc.missing(i, 0) = true;

    AppendixAReport rep;
    rep.eps_small = eps_small;
    for (int i = n_miss; i < n; ++i) rep.observed.push_back(X(i, 0));

    ImputationSpec spec;
    spec.algorithm = ImputeAlgorithm::Pmm;
    spec.level = ImputeLevel::Feature;
    spec.allow_feature_pmm = true;
    spec.n_imputations = 1;
    spec.seed = splitmix64(seed ^ splitmix64(7));

    spec.ridge_eps = eps_small;
    const auto small = pmm_impute(inc, spec)[0];
    for (int i = 0; i < n_miss; ++i) rep.imputed_small.push_back(small(i, 0));

    // Resolve the relative default the same way the imputer does: from the
    // centered regressor block of the observed rows.
    {
        Eigen::MatrixXd Xo = X.bottomRows(n - n_miss).rightCols(m);
        Xo.rowwise() -= Xo.colwise().mean().eval();
        rep.eps_default = 1e-5 * Xo.cwiseProduct(Xo).sum() / m;
    }
    spec.ridge_eps = 0.0;
    const auto dflt = pmm_impute(inc, spec)[0];
    for (int i = 0; i < n_miss; ++i) rep.imputed_default.push_back(dflt(i, 0));

    rep.ks_small = ks_statistic(rep.imputed_small, rep.observed);
    rep.ks_default = ks_statistic(rep.imputed_default, rep.observed);
    return rep;
}

std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::string& path) {
    std::ifstream is(path);
    if (!is) throw EmptyInput("cannot open " + path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string()
                                          : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) out.emplace_back(key, value);
    }
    return out;
}

}  // namespace staplr
