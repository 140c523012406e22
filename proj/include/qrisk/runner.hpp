#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace qrisk::runner {

// Everything the four subcommands need, with the documented defaults.
// Every field maps 1:1 to a `key = value` line in the config file and to a
// CLI flag of the same name.
struct RunConfig {
    // data source: a CSV path, or (when empty) the synthetic cohort
    std::string data_csv;
    std::uint64_t cohort_seed = 1;

    // model features (subset of the cohort schema)
    std::vector<std::string> features = {"NOCOIL", "ACSP", "DM", "SMOKING"};

    // qnn settings
    std::string ansatz = "efficient_su2";  // efficient_su2 | real_amplitudes
    int ansatz_reps = 3;
    int feature_map_reps = 1;
    std::vector<std::string> optimizers = {"bfgs"};
    double noise_p = 0.05;
    std::string eval_mode = "exact";  // exact | shots
    int shots = 1024;
    int runs = 10;
    int budget = 75;

    // classical comparison set
    std::vector<std::string> baselines = {"logreg", "lda", "gnb", "knn", "adaboost", "mlp"};

    // threshold selection
    std::string threshold_rule = "fixed_sensitivity";  // youden | fixed_sensitivity | fbeta
    double sensitivity_floor = 0.83;
    double fbeta = 2.0;

    // cross-validation
    int outer_folds = 5;
    int inner_folds = 3;
    std::uint64_t fold_seed = 7;

    // importance reports
    int importance_repeats = 100;
    double importance_epsilon = 0.01;

    // master seed and output directory
    std::uint64_t seed = 1;
    std::string out_dir = "out";
};

// Flat `key = value` config file; '#' starts a comment; unknown keys error.
RunConfig load_config(const std::string& path);

// Assign one key (same names as the config file). Throws on unknown keys or
// unparseable values; list-valued keys take comma-separated items.
void set_key(RunConfig& cfg, const std::string& key, const std::string& value);

// The full key set in canonical order, serialized — used for the manifest's
// config echo and for round-tripping configs to disk.
std::vector<std::pair<std::string, std::string>> config_items(const RunConfig& cfg);

// Subcommand bodies. Each returns a process exit code (0 = success) and
// prints a one-line diagnostic to stderr on failure.
int cmd_gen_data(const RunConfig& cfg);
int cmd_stats(const RunConfig& cfg);
int cmd_train_qnn(const RunConfig& cfg);
int cmd_compare(const RunConfig& cfg);

} // namespace qrisk::runner
