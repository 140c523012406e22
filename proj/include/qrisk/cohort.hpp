#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qrisk/stats.hpp"
#include "qrisk/util/linalg.hpp"

namespace qrisk::cohort {

// Canonical column order of the patient CSV schema. LEAK is the outcome;
// the twelve binary factors follow, then the five continuous measurements.
extern const std::vector<std::string> kBinaryColumns;      // NOCOIL .. ASA_GT2
extern const std::vector<std::string> kContinuousColumns;  // CRP .. LN

struct Row {
    int leak = 0;
    std::vector<int> bin;                         // aligned with kBinaryColumns
    std::vector<std::optional<double>> cont;      // aligned with kContinuousColumns
    std::vector<std::string> extras;              // unknown columns, passed through
};

struct Cohort {
    std::vector<Row> rows;
    std::vector<std::string> extra_names;
    // Schema columns actually present. A CSV may carry any subset of the
    // schema (plus LEAK, which is mandatory); computations that touch an
    // absent column fail loudly instead of reading default-filled cells.
    std::vector<bool> bin_present;   // aligned with kBinaryColumns
    std::vector<bool> cont_present;  // aligned with kContinuousColumns

    Cohort();
    std::size_t size() const { return rows.size(); }
    static int binary_index(const std::string& name);
    static int continuous_index(const std::string& name);
};

// Per-variable conditional counts: how many of each outcome group carry
// value 1. Binary factors are drawn independently within each group.
struct BinaryCountSpec {
    std::string name;
    int ones_leak = 0;
    int ones_noleak = 0;
};

// Continuous variables are Normal (or log-normal) within each group,
// calibrated so medians and interquartile ranges match the targets.
struct ContinuousDistSpec {
    std::string name;
    bool lognormal = false;
    double median_leak = 0, q1_leak = 0, q3_leak = 0;
    double median_noleak = 0, q1_noleak = 0, q3_noleak = 0;
};

struct CohortSpec {
    int n_leak = 28;
    int n_noleak = 172;
    std::vector<BinaryCountSpec> binary;
    std::vector<ContinuousDistSpec> continuous;

    // The published 200-patient cohort composition.
    static CohortSpec published();
};

Cohort generate_synthetic(const CohortSpec& spec, std::uint64_t seed);

Cohort load_csv(const std::string& path);
void save_csv(const Cohort& c, const std::string& path);

// 2x2 table of (variable == exposed_value) against the outcome.
stats::Table2x2 crosstab(const Cohort& c, const std::string& binary_name, int exposed_value);

std::vector<double> continuous_values(const Cohort& c, const std::string& name, int leak_group);

// Sensitivity-study hook: re-deal two binary variables inside one outcome
// group so their 2x2 joint hits the feasible count closest to a target odds
// ratio, while each variable's marginal count in the group stays exactly as
// generated (so the published univariate tables are untouched).
void inject_pair_association(Cohort& c, const std::string& name_a, const std::string& name_b,
                             int leak_group, double target_odds_ratio, std::uint64_t seed);

struct FeatureMatrix {
    std::vector<Vec> X;
    std::vector<int> y;
    std::vector<std::string> names;
    std::vector<std::size_t> rejected_rows;  // rows skipped for missing features
};

// Feature names may refer to binary or continuous columns. Records missing a
// requested continuous value are rejected (indices recorded, data excluded).
FeatureMatrix build_features(const Cohort& c, const std::vector<std::string>& feature_names);

struct Standardizer {
    Vec mean, stddev;               // population std with a 1e-12 floor
    std::vector<bool> constant;     // flagged columns transform to 0

    static Standardizer fit(const std::vector<Vec>& X);
    std::vector<Vec> transform(const std::vector<Vec>& X) const;
};

struct OuterFold {
    std::vector<std::size_t> train, test;
    // (train, validation) index pairs, relative to the full dataset.
    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> inner;
};

// Seeded shuffle, then contiguous near-equal blocks; unstratified. Inner
// folds partition each outer-train set in its shuffled order.
std::vector<OuterFold> make_folds(std::size_t n, int n_outer, int n_inner, std::uint64_t seed);

} // namespace qrisk::cohort
