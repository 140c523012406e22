#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "qrisk/runner.hpp"

namespace {

struct KeyHelp {
    const char* key;
    const char* help;
};

const std::vector<KeyHelp> kKeys = {
    {"data_csv", "input cohort CSV (empty: generate synthetic data)"},
    {"cohort_seed", "seed for the synthetic cohort generator"},
    {"features", "comma-separated model feature columns"},
    {"ansatz", "efficient_su2 | real_amplitudes"},
    {"ansatz_reps", "ansatz repetition count"},
    {"feature_map_reps", "feature-map repetition count"},
    {"optimizers", "comma-separated optimizer list (cmaes,spsa,cobyla,bfgs,slsqp)"},
    {"noise_p", "depolarizing probability after each 1-qubit gate"},
    {"eval_mode", "exact | shots"},
    {"shots", "shots per prediction in shot mode"},
    {"runs", "independent training repetitions"},
    {"budget", "optimizer iteration budget"},
    {"baselines", "comma-separated baseline families"},
    {"threshold_rule", "youden | fixed_sensitivity | fbeta"},
    {"sensitivity_floor", "sensitivity floor for fixed_sensitivity"},
    {"fbeta", "beta for the fbeta rule"},
    {"outer_folds", "outer cross-validation folds"},
    {"inner_folds", "inner folds for hyperparameter search"},
    {"fold_seed", "seed for fold assignment"},
    {"importance_repeats", "permutation importance repeats"},
    {"importance_epsilon", "gradient importance perturbation"},
    {"seed", "root seed for training runs"},
    {"out", "output directory"},
};

struct SubState {
    CLI::App* app = nullptr;
    std::string config_path;
    std::map<std::string, std::string> values;
};

void wire(SubState& st) {
    st.app->add_option("--config", st.config_path, "flat `key = value` config file");
    for (const auto& kh : kKeys)
        st.app->add_option("--" + std::string(kh.key), st.values[kh.key], kh.help);
}

int build_config(const SubState& st, qrisk::runner::RunConfig& cfg) {
    try {
        if (!st.config_path.empty()) cfg = qrisk::runner::load_config(st.config_path);
        for (const auto& kh : kKeys)
            if (st.app->count("--" + std::string(kh.key)))
                qrisk::runner::set_key(cfg, kh.key, st.values.at(kh.key));
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anastomotic-leak risk models: classical statistics and quantum classifiers"};
    app.require_subcommand(1);

    SubState gen, stats, train, compare;
    gen.app = app.add_subcommand("gen-data", "generate or re-emit the cohort CSV");
    stats.app = app.add_subcommand("stats", "univariate tables and logistic models");
    train.app = app.add_subcommand("train-qnn", "train variational quantum classifiers");
    compare.app = app.add_subcommand("compare", "cross-validated model comparison");
    for (auto* st : {&gen, &stats, &train, &compare}) wire(*st);

    CLI11_PARSE(app, argc, argv);

    qrisk::runner::RunConfig cfg;
    if (gen.app->parsed()) {
        if (int rc = build_config(gen, cfg)) return rc;
        return qrisk::runner::cmd_gen_data(cfg);
    }
    if (stats.app->parsed()) {
        if (int rc = build_config(stats, cfg)) return rc;
        return qrisk::runner::cmd_stats(cfg);
    }
    if (train.app->parsed()) {
        if (int rc = build_config(train, cfg)) return rc;
        return qrisk::runner::cmd_train_qnn(cfg);
    }
    if (int rc = build_config(compare, cfg)) return rc;
    return qrisk::runner::cmd_compare(cfg);
}
