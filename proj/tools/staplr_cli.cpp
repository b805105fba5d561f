#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "staplr/experiment.hpp"
#include "staplr/rng.hpp"
#include "staplr/simgen.hpp"

using namespace staplr;

namespace {

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

Preset parse_preset(const std::string& s) {
    if (s == "paper") return Preset::Paper;
    if (s == "desk") return Preset::Desk;
    throw CLI::ValidationError("--preset", "expected 'paper' or 'desk'");
}

// "fraction:missing_view:noise_view", e.g. "0.9:largest:smallest"
Condition parse_condition(const std::string& s) {
    const auto parts = split_list(s, ':');
    if (parts.size() != 3)
        throw CLI::ValidationError(
            "--conditions", "expected fraction:missing_view:noise_view");
    Condition c;
    c.missing_fraction = std::stod(parts[0]);
    c.missing_view = view_choice_from_string(parts[1]);
    c.noise_view = view_choice_from_string(parts[2]);
    return c;
}

struct RunArgs {
    std::string preset = "desk";
    std::string methods = "CDA,CCA,MI,MF,mMI,mMF,mPMM,cvPMM";
    std::string conditions = "all";
    int reps = 20;
    std::uint64_t seed = 0;
    int threads = 0;  // 0: resolve from STAPLR_THREADS, else 1
    std::string out = "results.csv";
};

void apply_config_file(RunArgs& a, const std::string& path,
                       const std::set<std::string>& cli_given) {
    for (const auto& [key, value] : read_config_file(path)) {
        if (cli_given.count(key)) continue;  // CLI overrides file
        if (key == "preset")
            a.preset = value;
        else if (key == "methods")
            a.methods = value;
        else if (key == "conditions")
            a.conditions = value;
        else if (key == "reps")
            a.reps = std::stoi(value);
        else if (key == "seed")
            a.seed = std::stoull(value);
        else if (key == "threads")
            a.threads = std::stoi(value);
        else if (key == "out")
            a.out = value;
        else
            throw CLI::ValidationError("--config", "unknown key: " + key);
    }
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("STAPLR_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stacked penalized logistic regression simulation harness"};
    app.require_subcommand(1);

    RunArgs ra;
    std::string config_path;
    auto* run = app.add_subcommand("run", "Run a simulation grid");
    auto* opt_preset = run->add_option("--preset", ra.preset, "paper or desk");
    auto* opt_methods =
        run->add_option("--methods", ra.methods, "comma-separated method list");
    auto* opt_conditions = run->add_option(
        "--conditions", ra.conditions,
        "'all' or comma-separated fraction:missing_view:noise_view");
    auto* opt_reps = run->add_option("--reps", ra.reps, "replications");
    auto* opt_seed = run->add_option("--seed", ra.seed, "master seed");
    auto* opt_threads = run->add_option(
        "--threads", ra.threads, "worker threads (or STAPLR_THREADS env var)");
    auto* opt_out = run->add_option("--out", ra.out, "records CSV path");
    run->add_option("--config", config_path,
                    "key=value config file; flags take precedence");

    std::string sum_in, sum_out = "summary.csv";
    auto* sum = app.add_subcommand("summarize", "Summarize a records CSV");
    sum->add_option("--in", sum_in, "records CSV")->required();
    sum->add_option("--out", sum_out, "summary CSV path");

    auto* demo = app.add_subcommand("demo", "Built-in demonstrations");
    std::uint64_t demo_seed = 1;
    auto* appa = demo->add_subcommand(
        "appendix-a", "High-dimensional PMM degradation demo");
    appa->add_option("--seed", demo_seed, "RNG seed");

    std::string exp_preset = "desk", exp_prefix = "dataset";
    std::string exp_condition = "0.5:smallest:smallest";
    int exp_rep = 0;
    std::uint64_t exp_seed = 0;
    auto* exp = app.add_subcommand(
        "export", "Write one replication's masked training set as CSV");
    exp->add_option("--preset", exp_preset, "paper or desk");
    exp->add_option("--condition", exp_condition,
                    "fraction:missing_view:noise_view");
    exp->add_option("--rep", exp_rep, "replication index");
    exp->add_option("--seed", exp_seed, "master seed");
    exp->add_option("--out", exp_prefix, "output path prefix");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            std::set<std::string> given;
            for (const auto& [flag, opt] :
                 std::initializer_list<std::pair<const char*, CLI::Option*>>{
                     {"preset", opt_preset},
                     {"methods", opt_methods},
                     {"conditions", opt_conditions},
                     {"reps", opt_reps},
                     {"seed", opt_seed},
                     {"threads", opt_threads},
                     {"out", opt_out}})
                if (opt->count()) given.insert(flag);
            if (!config_path.empty()) apply_config_file(ra, config_path, given);

            GridConfig gc;
            gc.preset = parse_preset(ra.preset);
            for (const auto& m : split_list(ra.methods, ','))
                gc.methods.push_back(method_from_string(m));
            if (ra.conditions == "all")
                gc.conditions = all_conditions();
            else
                for (const auto& c : split_list(ra.conditions, ','))
                    gc.conditions.push_back(parse_condition(c));
            gc.reps = ra.reps;
            gc.master_seed = ra.seed;
            gc.n_threads = resolve_threads(ra.threads);
            gc.out_path = ra.out;

            const auto records = run_grid(gc);
            int ok = 0;
            for (const auto& r : records) ok += r.ok;
            std::printf("%zu records (%d ok, %zu failed) -> %s\n",
                        records.size(), ok, records.size() - ok,
                        ra.out.c_str());
        } else if (sum->parsed()) {
            const auto rows = summarize(read_records_csv(sum_in));
            write_summary_csv(sum_out, rows);
            std::printf("%zu summary rows -> %s\n", rows.size(),
                        sum_out.c_str());
        } else if (appa->parsed()) {
            const auto rep = appendix_a_demo(demo_seed);
            std::printf("stabilizer %-12g KS(imputed, observed) = %.4f\n",
                        rep.eps_small, rep.ks_small);
            std::printf("stabilizer %-12g KS(imputed, observed) = %.4f\n",
                        rep.eps_default, rep.ks_default);
            std::printf("imputed values (stabilizer %g):\n", rep.eps_small);
            for (double v : rep.imputed_small) std::printf("  %.6f\n", v);
        } else if (exp->parsed()) {
            const Condition cond = parse_condition(exp_condition);
            SimConfig sc = preset_sim_config(parse_preset(exp_preset), cond);
            const std::uint64_t rep_seed =
                splitmix64(exp_seed ^ splitmix64(0xA000 + exp_rep));
            sc.seed = splitmix64(rep_seed ^ splitmix64(1));
            const auto data = gen_dataset(sc);
            const int target = cond.missing_view == ViewChoice::Smallest
                                   ? 0
                                   : static_cast<int>(sc.view_sizes.size()) - 1;
            const auto plan = make_missingness_plan(
                sc.n_train, target, cond.missing_fraction,
                splitmix64(rep_seed ^ splitmix64(2)));
            export_delimited(inject_missingness(data.train, plan), exp_prefix);
            std::printf("wrote %s.csv and %s.mask.csv\n", exp_prefix.c_str(),
                        exp_prefix.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
