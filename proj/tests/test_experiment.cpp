#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "staplr/experiment.hpp"

using namespace staplr;

namespace {

ExperimentRecord make_record(double frac, ViewChoice mv, ViewChoice nv,
                             MethodId method, int rep, double acc) {
    ExperimentRecord r;
    r.condition = {frac, mv, nv};
    r.method = method;
    r.rep = rep;
    r.seed = 0xDEADBEEFull + rep;
    r.ok = true;
    r.accuracy = acc;
    r.msep = 0.01 * (rep + 1);
    r.deviance = 0.5 + 0.1 * rep;
    r.prop_correct = 0.75;
    r.tpr = 1.0;
    r.fpr = 1.0 / 3.0;
    r.fdr = 0.25;
    r.log_seconds = std::log10(2.0 + rep);
    return r;
}

}  // namespace

TEST_CASE("method and view-choice names round-trip") {
    for (int i = 0; i < 8; ++i) {
        const auto m = static_cast<MethodId>(i);
        CHECK(method_from_string(to_string(m)) == m);
    }
    CHECK(to_string(MethodId::cvPMM) == "cvPMM");
    CHECK(view_choice_from_string("smallest") == ViewChoice::Smallest);
    CHECK(view_choice_from_string("largest") == ViewChoice::Largest);
    CHECK_THROWS_AS(method_from_string("bogus"), EmptyInput);
    CHECK_THROWS_AS(view_choice_from_string("middle"), EmptyInput);
}

TEST_CASE("study grid has eight conditions") {
    const auto cs = all_conditions();
    REQUIRE(cs.size() == 8);
    std::set<std::tuple<double, int, int>> seen;
    for (const auto& c : cs) {
        CHECK((c.missing_fraction == 0.5 || c.missing_fraction == 0.9));
        seen.insert({c.missing_fraction, static_cast<int>(c.missing_view),
                     static_cast<int>(c.noise_view)});
    }
    CHECK(seen.size() == 8);
}

TEST_CASE("preset sim config places the noise view") {
    Condition c;
    c.noise_view = ViewChoice::Largest;
    auto sc = preset_sim_config(Preset::Desk, c);
    CHECK(sc.noise_view == static_cast<int>(sc.view_sizes.size()) - 1);
    CHECK(sc.n_train == 400);
    c.noise_view = ViewChoice::Smallest;
    sc = preset_sim_config(Preset::Paper, c);
    CHECK(sc.noise_view == 0);
    CHECK(sc.n_train == 1000);
    CHECK(sc.view_sizes.back() == 5000);
}

TEST_CASE("records CSV round-trips exactly") {
    std::vector<ExperimentRecord> recs;
    recs.push_back(make_record(0.5, ViewChoice::Smallest, ViewChoice::Largest,
                               MethodId::mPMM, 0, 0.83));
    recs.push_back(make_record(0.9, ViewChoice::Largest, ViewChoice::Smallest,
                               MethodId::MF, 3, 1.0 / 3.0));
    // one failure, and one record without selection rates
    ExperimentRecord bad;
    bad.condition = {0.9, ViewChoice::Largest, ViewChoice::Largest};
    bad.method = MethodId::CCA;
    bad.rep = 7;
    bad.seed = 42;
    bad.ok = false;
    bad.error_tag = "NoCompleteCases";
    recs.push_back(bad);
    auto no_rates = make_record(0.5, ViewChoice::Smallest, ViewChoice::Smallest,
                                MethodId::CDA, 1, 0.901);
    no_rates.tpr.reset();
    no_rates.fpr.reset();
    recs.push_back(no_rates);

    const std::string path = "/tmp/staplr_records_rt.csv";
    write_records_csv(path, recs);
    const auto back = read_records_csv(path);
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& a = recs[i];
        const auto& b = back[i];
        CHECK(a.condition.missing_fraction == b.condition.missing_fraction);
        CHECK(a.condition.missing_view == b.condition.missing_view);
        CHECK(a.condition.noise_view == b.condition.noise_view);
        CHECK(a.method == b.method);
        CHECK(a.rep == b.rep);
        CHECK(a.seed == b.seed);
        CHECK(a.ok == b.ok);
        CHECK(a.error_tag == b.error_tag);
        if (a.ok) {
            CHECK(a.accuracy == b.accuracy);
            CHECK(a.msep == b.msep);
            CHECK(a.deviance == b.deviance);
            CHECK(a.prop_correct == b.prop_correct);
            CHECK(a.tpr.has_value() == b.tpr.has_value());
            if (a.tpr) CHECK(*a.tpr == *b.tpr);
            CHECK(a.fpr.has_value() == b.fpr.has_value());
            if (a.fpr) CHECK(*a.fpr == *b.fpr);
            CHECK(a.fdr == b.fdr);
            CHECK(a.log_seconds == b.log_seconds);
        }
    }
    std::remove(path.c_str());
}

TEST_CASE("read_records_csv rejects malformed input") {
    const std::string path = "/tmp/staplr_records_bad.csv";
    {
        std::ofstream os(path);
        os << "not,a,real,header\n";
    }
    CHECK_THROWS_AS(read_records_csv(path), EmptyInput);
    CHECK_THROWS_AS(read_records_csv("/tmp/does_not_exist_staplr.csv"),
                    EmptyInput);
    std::remove(path.c_str());
}

TEST_CASE("summarize basic statistics") {
    std::vector<ExperimentRecord> recs;
    for (int rep = 0; rep < 5; ++rep)
        recs.push_back(make_record(0.9, ViewChoice::Largest,
                                   ViewChoice::Smallest, MethodId::mMI, rep,
                                   0.70 + 0.05 * rep));
    auto failed = recs[0];
    failed.ok = false;
    failed.error_tag = "ViewTooSparse";
    recs.push_back(failed);

    const auto rows = summarize(recs);
    REQUIRE(rows.size() == 1);
    const auto& row = rows[0];
    CHECK(row.method == MethodId::mMI);
    CHECK(row.n_ok == 5);
    CHECK(row.n_failed == 1);
    // accuracy is 0.70, 0.75, 0.80, 0.85, 0.90
    CHECK(row.accuracy.mean == doctest::Approx(0.80));
    CHECK(row.accuracy.median == doctest::Approx(0.80));
    CHECK(row.accuracy.q25 == doctest::Approx(0.75));
    CHECK(row.accuracy.q75 == doctest::Approx(0.85));
    CHECK(row.accuracy.sd ==
          doctest::Approx(std::sqrt(0.025 / 4.0)));  // sd of the 5 values
    CHECK(row.accuracy.n == 5);

    // single-record group: stats collapse onto the record
    const auto single = summarize({recs[2]});
    REQUIRE(single.size() == 1);
    CHECK(single[0].accuracy.mean == recs[2].accuracy);
    CHECK(single[0].accuracy.sd == 0.0);
    CHECK(single[0].accuracy.median == recs[2].accuracy);

    CHECK_THROWS_AS(summarize({}), EmptyInput);
}

TEST_CASE("summarize is order-invariant and sorts groups canonically") {
    std::vector<ExperimentRecord> recs;
    for (int rep = 0; rep < 4; ++rep) {
        recs.push_back(make_record(0.9, ViewChoice::Largest,
                                   ViewChoice::Smallest, MethodId::CDA, rep,
                                   0.6 + 0.01 * rep));
        recs.push_back(make_record(0.5, ViewChoice::Smallest,
                                   ViewChoice::Largest, MethodId::cvPMM, rep,
                                   0.7 + 0.01 * rep));
    }
    auto shuffled = recs;
    std::reverse(shuffled.begin(), shuffled.end());
    const auto a = summarize(recs);
    const auto b = summarize(shuffled);
    REQUIRE(a.size() == 2);
    REQUIRE(b.size() == 2);
    // canonical order: by condition (fraction, missing view, noise view)
    CHECK(a[0].condition.missing_fraction == 0.5);
    CHECK(a[1].condition.missing_fraction == 0.9);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].method == b[i].method);
        CHECK(a[i].accuracy.mean == b[i].accuracy.mean);
        CHECK(a[i].accuracy.q75 == b[i].accuracy.q75);
        CHECK(a[i].log_seconds.sd == b[i].log_seconds.sd);
    }
    // means stay inside the observed range
    for (const auto& row : a) {
        CHECK(row.accuracy.mean >= row.accuracy.q25 - 0.02);
        CHECK(row.accuracy.mean <= row.accuracy.q75 + 0.02);
    }
}

TEST_CASE("summary CSV has one line per group plus header") {
    std::vector<ExperimentRecord> recs;
    for (int rep = 0; rep < 3; ++rep)
        recs.push_back(make_record(0.5, ViewChoice::Smallest,
                                   ViewChoice::Smallest, MethodId::MI, rep,
                                   0.8));
    const std::string path = "/tmp/staplr_summary.csv";
    write_summary_csv(path, summarize(recs));
    std::ifstream is(path);
    std::string line;
    int lines = 0;
    while (std::getline(is, line)) ++lines;
    CHECK(lines == 2);
    std::remove(path.c_str());
}

TEST_CASE("ks_statistic hand-checked cases") {
    // identical samples
    CHECK(ks_statistic({1, 2, 3}, {1, 2, 3}) == 0.0);
    // disjoint supports
    CHECK(ks_statistic({0, 1}, {5, 6}) == 1.0);
    // {1,2} vs {2,3}: ECDF gap peaks at 1/2 just below 2
    CHECK(ks_statistic({1, 2}, {2, 3}) == doctest::Approx(0.5));
    // heavy ties: a = {0,0,0,1}, b = {0,1,1,1}; at 0: |3/4 - 1/4| = 1/2
    CHECK(ks_statistic({0, 0, 0, 1}, {0, 1, 1, 1}) == doctest::Approx(0.5));
    // tie spanning both samples must advance both ECDFs at once
    CHECK(ks_statistic({1, 1, 1}, {1, 1, 1}) == 0.0);
    // unequal sizes
    CHECK(ks_statistic({1, 2, 3, 4}, {2.5}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(ks_statistic({}, {1.0}), EmptyInput);
}

TEST_CASE("config file parser") {
    const std::string path = "/tmp/staplr_config_test.cfg";
    {
        std::ofstream os(path);
        os << "# a comment line\n"
           << "reps = 20\n"
           << "  methods =CDA, mMI  \n"
           << "\n"
           << "preset=desk # trailing comment\n"
           << "not a key value line\n"
           << "empty_value =\n";
    }
    const auto kv = read_config_file(path);
    REQUIRE(kv.size() == 4);
    CHECK(kv[0].first == "reps");
    CHECK(kv[0].second == "20");
    CHECK(kv[1].first == "methods");
    CHECK(kv[1].second == "CDA, mMI");
    CHECK(kv[2].first == "preset");
    CHECK(kv[2].second == "desk");
    CHECK(kv[3].first == "empty_value");
    CHECK(kv[3].second.empty());
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_config_file("/tmp/absent_staplr.cfg"), EmptyInput);
}

TEST_CASE("high-dimensional imputation demo") {
    const auto rep = appendix_a_demo(20260824);
    CHECK(rep.imputed_small.size() == 50);
    CHECK(rep.imputed_default.size() == 50);
    CHECK(rep.observed.size() == 150);
    CHECK(rep.eps_small == 1e-5);
    // resolved relative default is data-driven, roughly 1e-5 * n
    CHECK(rep.eps_default > 1e-4);
    CHECK(rep.eps_default < 1e-1);
    // donor property: imputed values are copies of observed values
    const std::set<double> obs(rep.observed.begin(), rep.observed.end());
    for (double v : rep.imputed_small) CHECK(obs.count(v) == 1);
    for (double v : rep.imputed_default) CHECK(obs.count(v) == 1);
    // under-stabilized imputations distort the distribution more
    CHECK(rep.ks_small > rep.ks_default);
    // determinism
    const auto again = appendix_a_demo(20260824);
    CHECK(again.ks_small == rep.ks_small);
    CHECK(again.imputed_default == rep.imputed_default);
}

TEST_CASE("complete-case replication runs end to end deterministically") {
    // 90% missingness on the largest view keeps the complete-case fit small
    // enough for a unit test.
    const Condition cond{0.9, ViewChoice::Largest, ViewChoice::Smallest};
    const auto rec =
        run_replication(cond, MethodId::CCA, 2, 20260824, Preset::Desk);
    REQUIRE(rec.ok);
    CHECK(rec.error_tag.empty());
    CHECK(rec.rep == 2);
    CHECK(rec.accuracy >= 0.0);
    CHECK(rec.accuracy <= 1.0);
    CHECK(rec.msep >= 0.0);
    CHECK(rec.msep <= 1.0);
    CHECK(rec.deviance > 0.0);
    CHECK(rec.prop_correct >= 0.0);
    CHECK(rec.prop_correct <= 1.0);
    REQUIRE(rec.tpr.has_value());
    REQUIRE(rec.fpr.has_value());

    const auto again =
        run_replication(cond, MethodId::CCA, 2, 20260824, Preset::Desk);
    CHECK(again.accuracy == rec.accuracy);
    CHECK(again.msep == rec.msep);
    CHECK(again.deviance == rec.deviance);
    CHECK(again.prop_correct == rec.prop_correct);
    CHECK(again.seed == rec.seed);
    // wall time varies between runs; everything else must not
    const auto other =
        run_replication(cond, MethodId::CCA, 3, 20260824, Preset::Desk);
    CHECK(other.seed != rec.seed);
}
