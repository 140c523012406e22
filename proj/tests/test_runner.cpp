#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qrisk/runner.hpp"
#include "qrisk/util/csv.hpp"

using namespace qrisk;
using runner::RunConfig;

namespace {

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << text;
}

struct DirGuard {
    std::string path;
    ~DirGuard() { std::filesystem::remove_all(path); }
};

struct FileGuard {
    std::string path;
    ~FileGuard() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
    const auto bytes = read_file(path);
    REQUIRE(bytes.has_value());
    return *bytes;
}

} // namespace

TEST_CASE("config files parse key = value lines with comments and blanks") {
    FileGuard g{"qrisk_test_good.conf"};
    write_file(g.path,
               "# training setup\n"
               "\n"
               "seed = 99\n"
               "features = DM, SMOKING , CRP\n"
               "ansatz = real_amplitudes   # trailing comment\n"
               "noise_p = 0.1\n"
               "optimizers = cobyla,spsa\n"
               "out = somewhere\n");
    const RunConfig cfg = runner::load_config(g.path);
    CHECK(cfg.seed == 99);
    CHECK(cfg.features == std::vector<std::string>{"DM", "SMOKING", "CRP"});
    CHECK(cfg.ansatz == "real_amplitudes");
    CHECK(cfg.noise_p == 0.1);
    CHECK(cfg.optimizers == std::vector<std::string>{"cobyla", "spsa"});
    CHECK(cfg.out_dir == "somewhere");
    // untouched keys keep their defaults
    CHECK(cfg.runs == 10);
    CHECK(cfg.budget == 75);
    CHECK(cfg.eval_mode == "exact");
}

TEST_CASE("config errors carry the file name and line number") {
    SUBCASE("missing equals sign") {
        FileGuard g{"qrisk_test_noeq.conf"};
        write_file(g.path, "seed = 1\nbudget 50\n");
        CHECK_THROWS_WITH_AS(runner::load_config(g.path),
                             "qrisk_test_noeq.conf:2: expected `key = value`",
                             std::runtime_error);
    }
    SUBCASE("unknown key") {
        FileGuard g{"qrisk_test_unknown.conf"};
        write_file(g.path, "# header\nshots = 64\nlerning_rate = 3\n");
        CHECK_THROWS_WITH_AS(runner::load_config(g.path),
                             "qrisk_test_unknown.conf:3: unknown config key: 'lerning_rate'",
                             std::runtime_error);
    }
    SUBCASE("bad value") {
        FileGuard g{"qrisk_test_badval.conf"};
        write_file(g.path, "noise_p = 1.5\n");
        try {
            runner::load_config(g.path);
            FAIL("expected a throw");
        } catch (const std::runtime_error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("qrisk_test_badval.conf:1") != std::string::npos);
            CHECK(msg.find("noise_p") != std::string::npos);
        }
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(runner::load_config("no_such_config_anywhere.conf"),
                        std::runtime_error);
    }
}

TEST_CASE("individual keys validate their values") {
    RunConfig cfg;
    CHECK_THROWS_AS(runner::set_key(cfg, "frobnicate", "1"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "ansatz", "hardware_efficient"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "eval_mode", "sampled"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "optimizers", "adam"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "baselines", "svm"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "threshold_rule", "max_acc"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "noise_p", "-0.1"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "noise_p", "abc"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "sensitivity_floor", "0"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "sensitivity_floor", "1.2"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "outer_folds", "1"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "inner_folds", "0"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "runs", "0"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "budget", "-1"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "shots", "0"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "features", ""), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "importance_epsilon", "0"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "fbeta", "0"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "seed", "-3"), std::invalid_argument);
    CHECK_THROWS_AS(runner::set_key(cfg, "cohort_seed", "12x"), std::invalid_argument);

    // a failed assignment must not half-apply
    CHECK(cfg.noise_p == 0.05);
    CHECK(cfg.outer_folds == 5);

    runner::set_key(cfg, "budget", "0");  // zero budget is allowed (evaluate-only)
    CHECK(cfg.budget == 0);
}

TEST_CASE("the canonical key list serializes and round-trips") {
    RunConfig cfg;
    runner::set_key(cfg, "features", "DM,CRP");
    runner::set_key(cfg, "optimizers", "spsa,bfgs");
    runner::set_key(cfg, "noise_p", "0.25");
    runner::set_key(cfg, "eval_mode", "shots");
    runner::set_key(cfg, "shots", "2048");
    runner::set_key(cfg, "out", "elsewhere");
    runner::set_key(cfg, "data_csv", "input.csv");

    const auto items = runner::config_items(cfg);
    RunConfig back;
    for (const auto& [k, v] : items)
        if (!v.empty()) runner::set_key(back, k, v);
    CHECK(runner::config_items(back) == items);

    // every key accepted by set_key appears exactly once in the echo
    std::vector<std::string> keys;
    for (const auto& [k, v] : items) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    CHECK(std::adjacent_find(keys.begin(), keys.end()) == keys.end());
    CHECK(items.size() == 23);
}

TEST_CASE("gen-data feeds stats and both runs are reproducible") {
    DirGuard d1{"qrisk_test_out_gen"};
    RunConfig gen;
    gen.cohort_seed = 3;
    gen.out_dir = d1.path;
    REQUIRE(runner::cmd_gen_data(gen) == 0);
    REQUIRE(std::filesystem::exists(d1.path + "/cohort.csv"));
    REQUIRE(std::filesystem::exists(d1.path + "/manifest.json"));

    // the manifest hashes exactly what was written
    const auto manifest = nlohmann::ordered_json::parse(slurp(d1.path + "/manifest.json"));
    CHECK(manifest["command"] == "gen-data");
    CHECK(manifest["config"]["cohort_seed"] == "3");
    REQUIRE(manifest["files"].size() == 1);
    CHECK(manifest["files"][0]["path"] == "cohort.csv");
    const std::string cohort_bytes = slurp(d1.path + "/cohort.csv");
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(cohort_bytes)));
    CHECK(manifest["files"][0]["fnv1a64"] == std::string(hex));
    CHECK(manifest["files"][0]["bytes"] == cohort_bytes.size());
    CHECK(manifest["wall_seconds"].get<double>() >= 0.0);

    // stats on the emitted csv reproduces the synthetic-cohort tables
    DirGuard d2{"qrisk_test_out_stats"};
    RunConfig st;
    st.data_csv = d1.path + "/cohort.csv";
    st.out_dir = d2.path;
    REQUIRE(runner::cmd_stats(st) == 0);
    for (const char* f : {"table1.csv", "table2.csv", "table3.csv", "logistic_models.csv",
                          "lrt.csv", "determination.csv", "classification.csv",
                          "manifest.json"})
        CHECK(std::filesystem::exists(d2.path + "/" + std::string(f)));

    const std::string table1 = slurp(d2.path + "/table1.csv");
    CHECK(table1.find("NOCOIL,No,25,120,145") != std::string::npos);
    CHECK(table1.find("NOCOIL,Yes,3,52,55") != std::string::npos);

    // the same invocation lands byte-identical, timing aside
    DirGuard d3{"qrisk_test_out_stats2"};
    RunConfig st2 = st;
    st2.out_dir = d3.path;
    REQUIRE(runner::cmd_stats(st2) == 0);
    for (const char* f : {"table1.csv", "table2.csv", "table3.csv", "logistic_models.csv",
                          "lrt.csv", "determination.csv", "classification.csv"})
        CHECK(slurp(d2.path + "/" + std::string(f)) == slurp(d3.path + "/" + std::string(f)));
    auto m2 = nlohmann::ordered_json::parse(slurp(d2.path + "/manifest.json"));
    auto m3 = nlohmann::ordered_json::parse(slurp(d3.path + "/manifest.json"));
    CHECK(m2["files"] == m3["files"]);
    m2.erase("wall_seconds");
    m3.erase("wall_seconds");
    m2["config"].erase("out");
    m3["config"].erase("out");
    CHECK(m2 == m3);
}

TEST_CASE("a small training run emits convergence, metrics and parameter tables") {
    DirGuard d{"qrisk_test_out_train"};
    RunConfig cfg;
    cfg.out_dir = d.path;
    cfg.features = {"NOCOIL", "DM"};
    cfg.ansatz = "real_amplitudes";
    cfg.ansatz_reps = 1;
    cfg.optimizers = {"cobyla"};
    cfg.runs = 1;
    cfg.budget = 3;
    cfg.outer_folds = 2;
    cfg.inner_folds = 2;
    REQUIRE(runner::cmd_train_qnn(cfg) == 0);

    const std::string met = slurp(d.path + "/qnn_metrics.csv");
    CHECK(met.find("kind,run,optimizer,ansatz,status") == 0);
    CHECK(met.find("run,0,cobyla,ra,") != std::string::npos);
    CHECK(met.find("mean,,cobyla,ra,") != std::string::npos);
    CHECK(met.find("std,,cobyla,ra,") != std::string::npos);

    const std::string conv = slurp(d.path + "/convergence.csv");
    CHECK(conv.find("0,cobyla,ra,0,") != std::string::npos);  // the initial loss row
    const std::string par = slurp(d.path + "/params.csv");
    CHECK(par.find("0,cobyla,ra,0,") != std::string::npos);
    CHECK(par.find("0,cobyla,ra,3,") != std::string::npos);  // 2 qubits x 2 layers = 4 params

    // rerun is deterministic, timing aside
    DirGuard d2{"qrisk_test_out_train2"};
    RunConfig cfg2 = cfg;
    cfg2.out_dir = d2.path;
    REQUIRE(runner::cmd_train_qnn(cfg2) == 0);
    CHECK(slurp(d.path + "/qnn_metrics.csv") == slurp(d2.path + "/qnn_metrics.csv"));
    CHECK(slurp(d.path + "/convergence.csv") == slurp(d2.path + "/convergence.csv"));
    CHECK(slurp(d.path + "/params.csv") == slurp(d2.path + "/params.csv"));
    auto ma = nlohmann::ordered_json::parse(slurp(d.path + "/manifest.json"));
    auto mb = nlohmann::ordered_json::parse(slurp(d2.path + "/manifest.json"));
    CHECK(ma["files"] == mb["files"]);  // identical content hashes
    ma.erase("wall_seconds");
    mb.erase("wall_seconds");
    ma["config"].erase("out");
    mb["config"].erase("out");
    CHECK(ma == mb);
}

TEST_CASE("subcommands fail cleanly on degenerate input") {
    SUBCASE("single-class outcome") {
        FileGuard g{"qrisk_test_oneclass.csv"};
        write_file(g.path, "LEAK,DM,NOCOIL,ACSP,SMOKING\n1,0,1,0,0\n1,1,0,1,0\n1,0,0,0,1\n");
        DirGuard d{"qrisk_test_out_oneclass"};
        RunConfig cfg;
        cfg.data_csv = g.path;
        cfg.out_dir = d.path;
        CHECK(runner::cmd_stats(cfg) == 1);
        CHECK(runner::cmd_train_qnn(cfg) == 1);
        CHECK(runner::cmd_compare(cfg) == 1);
    }
    SUBCASE("missing input csv") {
        DirGuard d{"qrisk_test_out_missing"};
        RunConfig cfg;
        cfg.data_csv = "not_a_real_file.csv";
        cfg.out_dir = d.path;
        CHECK(runner::cmd_gen_data(cfg) == 1);
        CHECK(runner::cmd_stats(cfg) == 1);
    }
    SUBCASE("features absent from the supplied csv") {
        FileGuard g{"qrisk_test_narrow.csv"};
        write_file(g.path, "LEAK,DM\n1,0\n0,1\n1,1\n0,0\n");
        DirGuard d{"qrisk_test_out_narrow"};
        RunConfig cfg;
        cfg.data_csv = g.path;
        cfg.out_dir = d.path;  // default features include NOCOIL, absent here
        CHECK(runner::cmd_train_qnn(cfg) == 1);
    }
}
