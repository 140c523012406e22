#include "qrisk/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "qrisk/baselines.hpp"
#include "qrisk/cohort.hpp"
#include "qrisk/importance.hpp"
#include "qrisk/metrics.hpp"
#include "qrisk/stats.hpp"
#include "qrisk/util/csv.hpp"
#include "qrisk/util/rng.hpp"
#include "qrisk/vqc.hpp"

namespace qrisk::runner {

namespace {

constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Config plumbing
// ---------------------------------------------------------------------------

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            if (!trim(cur).empty()) out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

std::string join_list(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += v[i];
    }
    return out;
}

long long parse_ll(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long r = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing junk");
        return r;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not an integer: '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        // stoull silently wraps negative input, so refuse a sign up front
        if (v.empty() || v[0] == '-' || v[0] == '+')
            throw std::invalid_argument("signed");
        std::size_t used = 0;
        const unsigned long long r = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing junk");
        return r;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not an unsigned integer: '" + v +
                                    "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double r = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing junk");
        return r;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not a number: '" + v + "'");
    }
}

int parse_int_min(const std::string& key, const std::string& v, long long lo) {
    const long long r = parse_ll(key, v);
    if (r < lo)
        throw std::invalid_argument("config key '" + key + "': must be >= " + std::to_string(lo));
    return static_cast<int>(r);
}

}  // namespace

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "data_csv") {
        cfg.data_csv = value;
    } else if (key == "cohort_seed") {
        cfg.cohort_seed = parse_u64(key, value);
    } else if (key == "features") {
        cfg.features = split_list(value);
        if (cfg.features.empty()) throw std::invalid_argument("config key 'features': empty list");
    } else if (key == "ansatz") {
        if (value != "efficient_su2" && value != "real_amplitudes")
            throw std::invalid_argument("config key 'ansatz': unknown value '" + value + "'");
        cfg.ansatz = value;
    } else if (key == "ansatz_reps") {
        cfg.ansatz_reps = parse_int_min(key, value, 1);
    } else if (key == "feature_map_reps") {
        cfg.feature_map_reps = parse_int_min(key, value, 1);
    } else if (key == "optimizers") {
        cfg.optimizers = split_list(value);
        if (cfg.optimizers.empty())
            throw std::invalid_argument("config key 'optimizers': empty list");
        for (const auto& o : cfg.optimizers) optim::method_from_name(o);  // validates
    } else if (key == "noise_p") {
        const double p = parse_double(key, value);
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("config key 'noise_p': must lie in [0,1]");
        cfg.noise_p = p;
    } else if (key == "eval_mode") {
        if (value != "exact" && value != "shots")
            throw std::invalid_argument("config key 'eval_mode': unknown value '" + value + "'");
        cfg.eval_mode = value;
    } else if (key == "shots") {
        cfg.shots = parse_int_min(key, value, 1);
    } else if (key == "runs") {
        cfg.runs = parse_int_min(key, value, 1);
    } else if (key == "budget") {
        cfg.budget = parse_int_min(key, value, 0);
    } else if (key == "baselines") {
        cfg.baselines = split_list(value);
        for (const auto& b : cfg.baselines) baselines::family_from_name(b);  // validates
    } else if (key == "threshold_rule") {
        if (value != "youden" && value != "fixed_sensitivity" && value != "fbeta")
            throw std::invalid_argument("config key 'threshold_rule': unknown value '" + value +
                                        "'");
        cfg.threshold_rule = value;
    } else if (key == "sensitivity_floor") {
        const double s = parse_double(key, value);
        if (s <= 0.0 || s > 1.0)
            throw std::invalid_argument("config key 'sensitivity_floor': must lie in (0,1]");
        cfg.sensitivity_floor = s;
    } else if (key == "fbeta") {
        const double b = parse_double(key, value);
        if (b <= 0.0) throw std::invalid_argument("config key 'fbeta': must be > 0");
        cfg.fbeta = b;
    } else if (key == "outer_folds") {
        cfg.outer_folds = parse_int_min(key, value, 2);
    } else if (key == "inner_folds") {
        cfg.inner_folds = parse_int_min(key, value, 2);
    } else if (key == "fold_seed") {
        cfg.fold_seed = parse_u64(key, value);
    } else if (key == "importance_repeats") {
        cfg.importance_repeats = parse_int_min(key, value, 1);
    } else if (key == "importance_epsilon") {
        const double e = parse_double(key, value);
        if (e <= 0.0)
            throw std::invalid_argument("config key 'importance_epsilon': must be > 0");
        cfg.importance_epsilon = e;
    } else if (key == "seed") {
        cfg.seed = parse_u64(key, value);
    } else if (key == "out") {
        cfg.out_dir = value;
    } else {
        throw std::invalid_argument("unknown config key: '" + key + "'");
    }
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected `key = value`");
        try {
            set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

std::vector<std::pair<std::string, std::string>> config_items(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("data_csv", cfg.data_csv);
    kv.emplace_back("cohort_seed", std::to_string(cfg.cohort_seed));
    kv.emplace_back("features", join_list(cfg.features));
    kv.emplace_back("ansatz", cfg.ansatz);
    kv.emplace_back("ansatz_reps", std::to_string(cfg.ansatz_reps));
    kv.emplace_back("feature_map_reps", std::to_string(cfg.feature_map_reps));
    kv.emplace_back("optimizers", join_list(cfg.optimizers));
    kv.emplace_back("noise_p", fmt_num(cfg.noise_p));
    kv.emplace_back("eval_mode", cfg.eval_mode);
    kv.emplace_back("shots", std::to_string(cfg.shots));
    kv.emplace_back("runs", std::to_string(cfg.runs));
    kv.emplace_back("budget", std::to_string(cfg.budget));
    kv.emplace_back("baselines", join_list(cfg.baselines));
    kv.emplace_back("threshold_rule", cfg.threshold_rule);
    kv.emplace_back("sensitivity_floor", fmt_num(cfg.sensitivity_floor));
    kv.emplace_back("fbeta", fmt_num(cfg.fbeta));
    kv.emplace_back("outer_folds", std::to_string(cfg.outer_folds));
    kv.emplace_back("inner_folds", std::to_string(cfg.inner_folds));
    kv.emplace_back("fold_seed", std::to_string(cfg.fold_seed));
    kv.emplace_back("importance_repeats", std::to_string(cfg.importance_repeats));
    kv.emplace_back("importance_epsilon", fmt_num(cfg.importance_epsilon));
    kv.emplace_back("seed", std::to_string(cfg.seed));
    kv.emplace_back("out", cfg.out_dir);
    return kv;
}

namespace {

// ---------------------------------------------------------------------------
// Output plumbing: every file is buffered, written by this single writer,
// and recorded; the manifest (with content hashes) is always written last.
// ---------------------------------------------------------------------------
class Emitter {
public:
    Emitter(const RunConfig& cfg, std::string command)
        : cfg_(cfg), command_(std::move(command)), t0_(std::chrono::steady_clock::now()) {
        std::filesystem::create_directories(cfg.out_dir);
    }

    void write_text(const std::string& rel, const std::string& content) {
        const std::filesystem::path p = std::filesystem::path(cfg_.out_dir) / rel;
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open for writing: " + p.string());
        out << content;
        rels_.push_back(rel);
    }

    void finish() {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        nlohmann::ordered_json m;
        m["command"] = command_;
        nlohmann::ordered_json conf;
        for (const auto& [k, v] : config_items(cfg_)) conf[k] = v;
        m["config"] = conf;
        std::sort(rels_.begin(), rels_.end());
        nlohmann::ordered_json files = nlohmann::ordered_json::array();
        for (const auto& rel : rels_) {
            const auto full = (std::filesystem::path(cfg_.out_dir) / rel).string();
            const auto bytes = read_file(full);
            if (!bytes) throw std::runtime_error("emitted file vanished: " + full);
            char hex[17];
            std::snprintf(hex, sizeof hex, "%016llx",
                          static_cast<unsigned long long>(fnv1a64(*bytes)));
            nlohmann::ordered_json f;
            f["path"] = rel;
            f["fnv1a64"] = hex;
            f["bytes"] = bytes->size();
            files.push_back(f);
        }
        m["files"] = files;
        m["versions"] = {{"qrisk", kVersion}};
        m["wall_seconds"] = wall;

        const auto p = (std::filesystem::path(cfg_.out_dir) / "manifest.json").string();
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open for writing: " + p);
        out << m.dump(2) << '\n';
    }

    std::size_t n_files() const { return rels_.size(); }

private:
    const RunConfig& cfg_;
    std::string command_;
    std::chrono::steady_clock::time_point t0_;
    std::vector<std::string> rels_;
};

struct CsvBuf {
    std::string data;
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) data += ',';
            data += cells[i];
        }
        data += '\n';
    }
};

std::string opt_cell(const std::optional<double>& v) { return v ? fmt_num(*v) : ""; }

cohort::Cohort acquire_cohort(const RunConfig& cfg) {
    if (!cfg.data_csv.empty()) return cohort::load_csv(cfg.data_csv);
    return cohort::generate_synthetic(cohort::CohortSpec::published(), cfg.cohort_seed);
}

void require_both_outcomes(const cohort::Cohort& c) {
    std::size_t leaks = 0;
    for (const auto& r : c.rows) leaks += static_cast<std::size_t>(r.leak);
    if (leaks == 0 || leaks == c.rows.size())
        throw std::runtime_error("single-class outcome: every record has LEAK=" +
                                 std::to_string(leaks ? 1 : 0));
}

metrics::ThresholdRule threshold_rule_from(const RunConfig& cfg) {
    metrics::ThresholdRule r;
    if (cfg.threshold_rule == "youden") {
        r.kind = metrics::ThresholdRule::Kind::youden;
    } else if (cfg.threshold_rule == "fixed_sensitivity") {
        r.kind = metrics::ThresholdRule::Kind::fixed_sensitivity;
        r.sensitivity = cfg.sensitivity_floor;
    } else {
        r.kind = metrics::ThresholdRule::Kind::fbeta;
        r.beta = cfg.fbeta;
    }
    return r;
}

vqc::VqcModel make_qnn(const RunConfig& cfg, std::size_t n_features, std::uint64_t shot_seed) {
    vqc::VqcModel m;
    m.feature_map.n_features = static_cast<int>(n_features);
    m.feature_map.reps = cfg.feature_map_reps;
    m.ansatz.family = cfg.ansatz == "real_amplitudes" ? circuits::AnsatzFamily::real_amplitudes
                                                      : circuits::AnsatzFamily::efficient_su2;
    m.ansatz.n_qubits = static_cast<int>(n_features);
    m.ansatz.reps = cfg.ansatz_reps;
    m.noise.p_gate = cfg.noise_p;
    m.mode = cfg.eval_mode == "shots" ? vqc::EvalMode::shots : vqc::EvalMode::exact;
    m.shots = static_cast<std::uint64_t>(cfg.shots);
    m.shot_seed = shot_seed;
    return m;
}

std::string qnn_tag(const RunConfig& cfg, const std::string& optimizer) {
    const std::string a = cfg.ansatz == "real_amplitudes" ? "ra" : "esu2";
    return "qnn_" + a + "_" + optimizer;
}

template <class T>
std::vector<T> take(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(v[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Tables 1-2: two published rows per variable; the RR numerator category is
// named explicitly because one published row (ICHS) quotes the risk ratio of
// its second-listed category.
// ---------------------------------------------------------------------------
struct CategoricalRowSpec {
    const char* variable;
    int first_value;  // category printed first
    const char* first_label;
    const char* second_label;
    int rr_value;  // category whose risk forms the RR numerator
};

const std::vector<CategoricalRowSpec> kTable1Rows = {
    {"NOCOIL", 0, "No", "Yes", 0},
    {"ICG", 0, "No", "Yes", 0},
    {"ACSP", 0, "No", "Yes", 0},
    {"PERFB", 0, "Bad", "Good", 0},
};

const std::vector<CategoricalRowSpec> kTable2Rows = {
    {"DM", 1, "Yes", "No", 1},      {"SMOKING", 1, "Yes", "No", 1},
    {"HT", 1, "Yes", "No", 1},      {"ASA_GT2", 1, ">2", "<=2", 1},
    {"CORT", 1, "Yes", "No", 1},    {"SEX", 1, "Female", "Male", 1},
    {"KOAG", 0, "No", "Yes", 0},    {"ICHS", 1, "Yes", "No", 0},
};

std::string categorical_table_csv(const cohort::Cohort& c,
                                  const std::vector<CategoricalRowSpec>& rows) {
    CsvBuf out;
    out.row({"variable", "category", "leak", "no_leak", "total", "rr", "ci_low", "ci_high",
             "p_value", "corrected", "rr_numerator"});
    for (const auto& spec : rows) {
        const auto shown = cohort::crosstab(c, spec.variable, spec.first_value);
        const auto rr_table = cohort::crosstab(c, spec.variable, spec.rr_value);
        const auto rr = stats::relative_risk(rr_table);
        const auto chi = stats::chi2_test(rr_table, stats::Correction::automatic);
        const std::string rr_label =
            spec.rr_value == spec.first_value ? spec.first_label : spec.second_label;
        const std::vector<std::string> shared = {fmt_num(rr.rr),
                                                 fmt_num(rr.ci_low),
                                                 fmt_num(rr.ci_high),
                                                 fmt_num(chi.p_value),
                                                 chi.corrected ? "yates" : "none",
                                                 rr_label};
        std::vector<std::string> r1 = {spec.variable, spec.first_label, fmt_num(shown.a),
                                       fmt_num(shown.b), fmt_num(shown.a + shown.b)};
        std::vector<std::string> r2 = {spec.variable, spec.second_label, fmt_num(shown.c),
                                       fmt_num(shown.d), fmt_num(shown.c + shown.d)};
        r1.insert(r1.end(), shared.begin(), shared.end());
        r2.insert(r2.end(), shared.begin(), shared.end());
        out.row(r1);
        out.row(r2);
    }
    return out.data;
}

std::string continuous_table_csv(const cohort::Cohort& c) {
    static const std::vector<std::string> kOrder = {"CRP", "BMI", "LN", "AGE", "HB"};
    CsvBuf out;
    out.row({"variable", "median_leak", "q1_leak", "q3_leak", "median_no_leak", "q1_no_leak",
             "q3_no_leak", "median_diff", "ci_low", "ci_high", "u", "p_value"});
    for (const auto& name : kOrder) {
        const auto x = cohort::continuous_values(c, name, 1);   // leak group
        const auto y = cohort::continuous_values(c, name, 0);   // no-leak group
        if (x.empty() || y.empty())
            throw std::runtime_error("continuous variable " + name + " missing in one group");
        const auto [q1x, q3x] = stats::quartiles(x);
        const auto [q1y, q3y] = stats::quartiles(y);
        const auto hl = stats::median_difference_ci(x, y);
        const auto mw = stats::mann_whitney(x, y);
        out.row({name, fmt_num(stats::median(x)), fmt_num(q1x), fmt_num(q3x),
                 fmt_num(stats::median(y)), fmt_num(q1y), fmt_num(q3y), fmt_num(hl.estimate),
                 fmt_num(hl.ci_low), fmt_num(hl.ci_high), fmt_num(mw.u), fmt_num(mw.p_value)});
    }
    return out.data;
}

void append_model_rows(CsvBuf& out, const std::string& tag, const stats::LogisticModel& m) {
    for (std::size_t j = 0; j < m.beta.size(); ++j) {
        const auto w = stats::wald_test(m, j);
        const double se = std::sqrt(std::max(m.covariance(j, j), 0.0));
        out.row({tag, j == 0 ? "Constant" : m.names[j - 1], fmt_num(m.beta[j]), fmt_num(se),
                 fmt_num(w.z), fmt_num(w.p_value)});
    }
}

std::vector<double> logistic_predict(const stats::LogisticModel& m, const std::vector<Vec>& X) {
    std::vector<double> p(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
        double z = m.beta[0];
        for (std::size_t j = 0; j < m.names.size(); ++j) z += m.beta[j + 1] * X[i][j];
        p[i] = 1.0 / (1.0 + std::exp(-z));
    }
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------
int cmd_gen_data(const RunConfig& cfg) {
    try {
        Emitter em(cfg, "gen-data");
        const auto c = acquire_cohort(cfg);
        const auto tmp = (std::filesystem::path(cfg.out_dir) / "cohort.csv").string();
        cohort::save_csv(c, tmp);
        const auto bytes = read_file(tmp);
        if (!bytes) throw std::runtime_error("failed to re-read " + tmp);
        em.write_text("cohort.csv", *bytes);
        em.finish();
        std::cout << "gen-data: wrote " << c.rows.size() << " records to " << cfg.out_dir
                  << "/cohort.csv\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "gen-data: " << e.what() << "\n";
        return 1;
    }
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------
int cmd_stats(const RunConfig& cfg) {
    try {
        Emitter em(cfg, "stats");
        const auto c = acquire_cohort(cfg);
        require_both_outcomes(c);

        em.write_text("table1.csv", categorical_table_csv(c, kTable1Rows));
        em.write_text("table2.csv", categorical_table_csv(c, kTable2Rows));
        em.write_text("table3.csv", continuous_table_csv(c));

        // consolidated logistic models on the raw (unstandardized) covariates
        static const std::vector<std::string> kFull = {
            "AGE", "SEX", "BMI", "ASA_GT2", "HT",  "ICHS", "DM",   "SMOKING",
            "CORT", "KOAG", "HB", "ICG",    "PERFB", "ACSP", "NOCOIL"};
        static const std::vector<std::string> kSignif = {"DM", "NOCOIL", "ICG", "SMOKING"};

        const auto full = cohort::build_features(c, kFull);
        const auto s1 = stats::logistic_fit(full.X, full.y, full.names);
        const auto s2 = stats::stepwise_reduce(full.X, full.y, full.names,
                                               stats::StepCriterion::aic);
        const auto s3 = stats::stepwise_reduce(full.X, full.y, full.names,
                                               stats::StepCriterion::bic);
        const auto sig = cohort::build_features(c, kSignif);
        const auto s4 = stats::logistic_fit(sig.X, sig.y, sig.names);
        const auto null_fit =
            stats::logistic_fit(std::vector<Vec>(full.X.size()), full.y, {});

        CsvBuf models;
        models.row({"model", "variable", "coefficient", "std_error", "z", "p_value"});
        append_model_rows(models, "null", null_fit);
        append_model_rows(models, "s1", s1);
        append_model_rows(models, "s2_aic", s2);
        append_model_rows(models, "s3_bic", s3);
        append_model_rows(models, "s4", s4);
        em.write_text("logistic_models.csv", models.data);

        CsvBuf lrt;
        lrt.row({"full", "reduced", "full_params", "reduced_params", "full_loglik",
                 "reduced_loglik", "deviance", "df", "p_value"});
        auto lrt_row = [&](const char* fa, const stats::LogisticModel& mf, const char* ra,
                           const stats::LogisticModel& mr) {
            const int pf = static_cast<int>(mf.beta.size());
            const int pr = static_cast<int>(mr.beta.size());
            const auto t = stats::likelihood_ratio_test(mf.loglik, pf, mr.loglik, pr);
            lrt.row({fa, ra, std::to_string(pf), std::to_string(pr), fmt_num(mf.loglik),
                     fmt_num(mr.loglik), fmt_num(t.deviance), std::to_string(t.df),
                     fmt_num(t.p_value)});
        };
        lrt_row("s2_aic", s2, "null", null_fit);
        lrt_row("s3_bic", s3, "null", null_fit);
        lrt_row("s1", s1, "s2_aic", s2);
        lrt_row("s1", s1, "s3_bic", s3);
        em.write_text("lrt.csv", lrt.data);

        CsvBuf det;
        det.row({"model", "mcfadden", "cox_snell", "nagelkerke"});
        auto det_row = [&](const char* tag, const stats::LogisticModel& m) {
            const auto d = stats::determination_coefficients(m);
            det.row({tag, fmt_num(d.mcfadden), fmt_num(d.cox_snell), fmt_num(d.nagelkerke)});
        };
        det_row("s1", s1);
        det_row("s2_aic", s2);
        det_row("s3_bic", s3);
        det_row("s4", s4);
        em.write_text("determination.csv", det.data);

        // in-sample classification summary at the Youden threshold
        CsvBuf cls;
        cls.row({"model", "threshold", "accuracy", "sensitivity", "specificity", "ppv", "npv"});
        metrics::ThresholdRule youden;
        youden.kind = metrics::ThresholdRule::Kind::youden;
        auto cls_row = [&](const char* tag, const stats::LogisticModel& m,
                           const cohort::FeatureMatrix& fm) {
            const auto p = logistic_predict(m, fm.X);
            const double t = metrics::select_threshold(p, fm.y, youden);
            const auto cm = metrics::confusion_metrics(p, fm.y, t);
            cls.row({tag, fmt_num(t), fmt_num(cm.accuracy), opt_cell(cm.sensitivity),
                     opt_cell(cm.specificity), opt_cell(cm.ppv), opt_cell(cm.npv)});
        };
        // the reduced models keep a subset of columns of `full`; rebuild
        // their feature matrices by name so predictions line up
        const auto fm_s2 = cohort::build_features(c, s2.names);
        const auto fm_s3 = cohort::build_features(c, s3.names);
        cls_row("s1", s1, full);
        cls_row("s2_aic", s2, fm_s2);
        cls_row("s3_bic", s3, fm_s3);
        cls_row("s4", s4, sig);
        em.write_text("classification.csv", cls.data);

        em.finish();
        std::cout << "stats: wrote " << em.n_files() << " tables to " << cfg.out_dir << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "stats: " << e.what() << "\n";
        return 1;
    }
}

// ---------------------------------------------------------------------------
// train-qnn
// ---------------------------------------------------------------------------
int cmd_train_qnn(const RunConfig& cfg) {
    try {
        Emitter em(cfg, "train-qnn");
        const auto c = acquire_cohort(cfg);
        require_both_outcomes(c);
        const auto fm = cohort::build_features(c, cfg.features);
        const auto folds =
            cohort::make_folds(fm.X.size(), cfg.outer_folds, cfg.inner_folds, cfg.fold_seed);
        const auto rule = threshold_rule_from(cfg);

        CsvBuf conv, met, par;
        conv.row({"run", "optimizer", "ansatz", "iteration", "loss"});
        met.row({"kind", "run", "optimizer", "ansatz", "status", "initial_loss", "final_loss",
                 "n_evals", "auc", "average_precision", "f1", "accuracy", "brier", "log_loss",
                 "efron_r2", "mz_r2", "count_r2", "sensitivity", "specificity", "ppv", "npv",
                 "threshold", "n_runs"});
        par.row({"run", "optimizer", "ansatz", "index", "value"});

        struct RunMetrics {
            bool ok = false;
            double initial = 0, final_loss = 0;
            metrics::EvalReport rep;
        };
        std::map<std::string, std::vector<RunMetrics>> per_opt;

        const std::string ansatz_tag = cfg.ansatz == "real_amplitudes" ? "ra" : "esu2";
        for (int run = 0; run < cfg.runs; ++run) {
            const auto& fold = folds[static_cast<std::size_t>(run) % folds.size()];
            const auto Xtr_raw = take(fm.X, fold.train);
            const auto ytr = take(fm.y, fold.train);
            const auto Xte_raw = take(fm.X, fold.test);
            const auto yte = take(fm.y, fold.test);
            const auto std_fit = cohort::Standardizer::fit(Xtr_raw);
            const auto Xtr = std_fit.transform(Xtr_raw);
            const auto Xte = std_fit.transform(Xte_raw);

            for (std::size_t oi = 0; oi < cfg.optimizers.size(); ++oi) {
                const auto& opt_name = cfg.optimizers[oi];
                const std::uint64_t run_base =
                    derive_seed(cfg.seed, static_cast<std::uint64_t>(run));
                auto m = make_qnn(cfg, fm.names.size(), derive_seed(run_base, 100 + oi));

                optim::MethodConfig mc;
                mc.method = optim::method_from_name(opt_name);
                mc.budget = cfg.budget;
                const auto rec = vqc::train(m, Xtr, ytr, mc, derive_seed(run_base, oi));

                conv.row({std::to_string(run), opt_name, ansatz_tag, "0",
                          fmt_num(rec.initial_loss)});
                for (std::size_t it = 0; it < rec.loss_trace.size(); ++it)
                    conv.row({std::to_string(run), opt_name, ansatz_tag,
                              std::to_string(it + 1), fmt_num(rec.loss_trace[it])});
                for (std::size_t j = 0; j < rec.best_theta.size(); ++j)
                    par.row({std::to_string(run), opt_name, ansatz_tag, std::to_string(j),
                             fmt_num(rec.best_theta[j])});

                RunMetrics rm;
                rm.initial = rec.initial_loss;
                rm.final_loss = rec.best_loss;
                std::string status;
                switch (rec.status) {
                    case vqc::TrainStatus::ok: status = "ok"; break;
                    case vqc::TrainStatus::diverged: status = "diverged"; break;
                    case vqc::TrainStatus::line_search_failed:
                        status = "line_search_stalled";
                        break;
                }
                std::vector<std::string> row = {"run",
                                               std::to_string(run),
                                               opt_name,
                                               ansatz_tag,
                                               status,
                                               fmt_num(rec.initial_loss),
                                               fmt_num(rec.best_loss),
                                               std::to_string(rec.n_evals)};
                try {
                    vqc::Evaluator ev(m);
                    if (m.mode == vqc::EvalMode::exact) ev.prepare_cache(Xte);
                    const auto probs = ev.predict_batch(Xte, m.theta);
                    const double t = metrics::select_threshold(probs, yte, rule);
                    rm.rep = metrics::evaluate(probs, yte, t);
                    rm.ok = rec.status != vqc::TrainStatus::diverged;
                    row.insert(row.end(),
                               {fmt_num(rm.rep.auc), fmt_num(rm.rep.average_precision),
                                opt_cell(rm.rep.f1), fmt_num(rm.rep.accuracy),
                                fmt_num(rm.rep.brier), fmt_num(rm.rep.log_loss),
                                fmt_num(rm.rep.efron_r2), fmt_num(rm.rep.mz_r2),
                                fmt_num(rm.rep.count_r2), opt_cell(rm.rep.sensitivity),
                                opt_cell(rm.rep.specificity), opt_cell(rm.rep.ppv),
                                opt_cell(rm.rep.npv), fmt_num(rm.rep.threshold), ""});
                } catch (const std::exception& e) {
                    row[4] = status + ";eval_failed:" + e.what();
                    row.insert(row.end(),
                               {"", "", "", "", "", "", "", "", "", "", "", "", "", "", ""});
                }
                met.row(row);
                per_opt[opt_name].push_back(rm);
            }
        }

        // mean and sample-std summary rows over the completed runs
        for (const auto& opt_name : cfg.optimizers) {
            const auto& rs = per_opt[opt_name];
            std::vector<const RunMetrics*> done;
            for (const auto& r : rs)
                if (r.ok) done.push_back(&r);
            const std::size_t nr = done.size();
            auto summarize = [&](const char* kind) {
                std::vector<std::string> row = {kind, "", opt_name, ansatz_tag, "", "", "", ""};
                auto stat_cell = [&](auto&& field) -> std::string {
                    if (nr == 0) return "";
                    double mean = 0;
                    for (const auto* r : done) mean += field(*r);
                    mean /= static_cast<double>(nr);
                    if (std::string(kind) == "mean") return fmt_num(mean);
                    if (nr < 2) return fmt_num(0.0);
                    double ss = 0;
                    for (const auto* r : done) {
                        const double d = field(*r) - mean;
                        ss += d * d;
                    }
                    return fmt_num(std::sqrt(ss / static_cast<double>(nr - 1)));
                };
                // initial/final loss live in dedicated columns
                row[5] = stat_cell([](const RunMetrics& r) { return r.initial; });
                row[6] = stat_cell([](const RunMetrics& r) { return r.final_loss; });
                row.insert(row.end(),
                           {stat_cell([](const RunMetrics& r) { return r.rep.auc; }),
                            stat_cell([](const RunMetrics& r) { return r.rep.average_precision; }),
                            stat_cell([](const RunMetrics& r) { return r.rep.f1.value_or(0.0); }),
                            stat_cell([](const RunMetrics& r) { return r.rep.accuracy; }),
                            stat_cell([](const RunMetrics& r) { return r.rep.brier; }),
                            stat_cell([](const RunMetrics& r) { return r.rep.log_loss; }),
                            stat_cell([](const RunMetrics& r) { return r.rep.efron_r2; }),
                            stat_cell([](const RunMetrics& r) { return r.rep.mz_r2; }),
                            stat_cell([](const RunMetrics& r) { return r.rep.count_r2; }),
                            stat_cell([](const RunMetrics& r) { return r.rep.sensitivity.value_or(0.0); }),
                            stat_cell([](const RunMetrics& r) { return r.rep.specificity.value_or(0.0); }),
                            stat_cell([](const RunMetrics& r) { return r.rep.ppv.value_or(0.0); }),
                            stat_cell([](const RunMetrics& r) { return r.rep.npv.value_or(0.0); }),
                            stat_cell([](const RunMetrics& r) { return r.rep.threshold; }),
                            std::to_string(nr)});
                met.row(row);
            };
            summarize("mean");
            summarize("std");
        }

        em.write_text("convergence.csv", conv.data);
        em.write_text("qnn_metrics.csv", met.data);
        em.write_text("params.csv", par.data);
        em.finish();
        std::cout << "train-qnn: " << cfg.runs << " runs x " << cfg.optimizers.size()
                  << " optimizers -> " << cfg.out_dir << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "train-qnn: " << e.what() << "\n";
        return 1;
    }
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------
int cmd_compare(const RunConfig& cfg) {
    try {
        Emitter em(cfg, "compare");
        const auto c = acquire_cohort(cfg);
        require_both_outcomes(c);
        const auto fm = cohort::build_features(c, cfg.features);
        const std::size_t n = fm.X.size();
        const auto folds =
            cohort::make_folds(n, cfg.outer_folds, cfg.inner_folds, cfg.fold_seed);
        const auto rule = threshold_rule_from(cfg);

        std::vector<std::string> model_names;
        for (const auto& b : cfg.baselines) model_names.push_back(b);
        std::vector<std::string> qnn_names;
        for (const auto& o : cfg.optimizers) qnn_names.push_back(qnn_tag(cfg, o));
        model_names.insert(model_names.end(), qnn_names.begin(), qnn_names.end());

        std::map<std::string, std::vector<double>> oof;  // out-of-fold probabilities
        for (const auto& mn : model_names) oof[mn].assign(n, 0.0);

        CsvBuf grid_csv;
        grid_csv.row({"family", "hyperparams", "fold", "auc"});

        for (std::size_t f = 0; f < folds.size(); ++f) {
            const auto& fold = folds[f];
            const auto Xtr_raw = take(fm.X, fold.train);
            const auto ytr = take(fm.y, fold.train);
            const auto Xte_raw = take(fm.X, fold.test);
            const auto yte = take(fm.y, fold.test);
            const auto std_fit = cohort::Standardizer::fit(Xtr_raw);
            const auto Xtr = std_fit.transform(Xtr_raw);
            const auto Xte = std_fit.transform(Xte_raw);

            // inner folds come as full-dataset indices; grid_search wants
            // positions within the outer-train subset
            std::map<std::size_t, std::size_t> pos;
            for (std::size_t i = 0; i < fold.train.size(); ++i) pos[fold.train[i]] = i;
            std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> inner;
            for (const auto& [itr, ite] : fold.inner) {
                std::vector<std::size_t> a, b;
                for (std::size_t i : itr) a.push_back(pos.at(i));
                for (std::size_t i : ite) b.push_back(pos.at(i));
                inner.emplace_back(std::move(a), std::move(b));
            }

            for (const auto& bname : cfg.baselines) {
                const auto family = baselines::family_from_name(bname);
                auto gs = baselines::grid_search(family, Xtr, ytr, inner);
                auto clf = baselines::fit(gs.best, Xtr, ytr);
                baselines::flip_if_auc_below_half(clf, Xte, yte);
                const auto probs = clf.predict_proba(Xte);
                for (std::size_t i = 0; i < fold.test.size(); ++i)
                    oof[bname][fold.test[i]] = probs[i];
                grid_csv.row({bname, gs.best.describe(), std::to_string(f + 1),
                              fmt_num(gs.best_mean_auc)});
            }

            for (std::size_t oi = 0; oi < cfg.optimizers.size(); ++oi) {
                const std::uint64_t fold_base =
                    derive_seed(cfg.seed, 7000 + static_cast<std::uint64_t>(f));
                auto m = make_qnn(cfg, fm.names.size(), derive_seed(fold_base, 100 + oi));
                optim::MethodConfig mc;
                mc.method = optim::method_from_name(cfg.optimizers[oi]);
                mc.budget = cfg.budget;
                vqc::train(m, Xtr, ytr, mc, derive_seed(fold_base, oi));
                vqc::Evaluator ev(m);
                if (m.mode == vqc::EvalMode::exact) ev.prepare_cache(Xte);
                const auto probs = ev.predict_batch(Xte, m.theta);
                for (std::size_t i = 0; i < fold.test.size(); ++i)
                    oof[qnn_names[oi]][fold.test[i]] = probs[i];
            }

            // per-fold ROC points, tagged by fold, where computable
            for (const auto& mn : model_names) {
                int pos_count = 0;
                for (int v : yte) pos_count += v;
                if (pos_count == 0 || pos_count == static_cast<int>(yte.size())) continue;
                std::vector<double> probs(fold.test.size());
                for (std::size_t i = 0; i < fold.test.size(); ++i)
                    probs[i] = oof[mn][fold.test[i]];
                const auto roc = metrics::roc_and_auc(probs, yte);
                CsvBuf rc;
                rc.row({"threshold", "fpr", "tpr"});
                for (const auto& pt : roc.points)
                    rc.row({fmt_num(pt.threshold), fmt_num(pt.fpr), fmt_num(pt.tpr)});
                em.write_text("roc_points/" + mn + "_fold" + std::to_string(f + 1) + ".csv",
                              rc.data);
            }
        }

        em.write_text("baseline_grid.csv", grid_csv.data);

        CsvBuf cmp;
        cmp.row({"model", "auc", "average_precision", "efron_r2", "mz_r2", "count_r2", "brier",
                 "log_loss", "f1", "threshold", "sensitivity", "specificity", "ppv", "npv",
                 "accuracy", "flagged"});
        std::string best_qnn;
        double best_qnn_auc = -1.0;
        for (const auto& mn : model_names) {
            const auto& probs = oof[mn];
            double t;
            bool flagged = false;
            try {
                t = metrics::select_threshold(probs, fm.y, rule);
            } catch (const std::exception&) {
                // sensitivity floor unattainable: flag the row and fall back
                // to the all-positive threshold rather than dropping it
                t = *std::min_element(probs.begin(), probs.end());
                flagged = true;
            }
            const auto rep = metrics::evaluate(probs, fm.y, t);
            cmp.row({mn, fmt_num(rep.auc), fmt_num(rep.average_precision),
                     fmt_num(rep.efron_r2), fmt_num(rep.mz_r2), fmt_num(rep.count_r2),
                     fmt_num(rep.brier), fmt_num(rep.log_loss), opt_cell(rep.f1),
                     fmt_num(rep.threshold), opt_cell(rep.sensitivity),
                     opt_cell(rep.specificity), opt_cell(rep.ppv), opt_cell(rep.npv),
                     fmt_num(rep.accuracy), flagged ? "1" : "0"});

            const auto roc = metrics::roc_and_auc(probs, fm.y);
            CsvBuf rc;
            rc.row({"threshold", "fpr", "tpr"});
            for (const auto& pt : roc.points)
                rc.row({fmt_num(pt.threshold), fmt_num(pt.fpr), fmt_num(pt.tpr)});
            em.write_text("roc_points/" + mn + ".csv", rc.data);

            const bool is_qnn = std::find(qnn_names.begin(), qnn_names.end(), mn) != qnn_names.end();
            if (is_qnn && rep.auc > best_qnn_auc) {
                best_qnn_auc = rep.auc;
                best_qnn = mn;
            }
        }
        em.write_text("comparison_table.csv", cmp.data);

        // both importance reports for the strongest QNN variant, retrained
        // on the full standardized cohort
        if (!qnn_names.empty()) {
            std::size_t oi = 0;
            for (std::size_t k = 0; k < qnn_names.size(); ++k)
                if (qnn_names[k] == best_qnn) oi = k;
            const auto std_all = cohort::Standardizer::fit(fm.X);
            const auto Xs = std_all.transform(fm.X);
            auto m = make_qnn(cfg, fm.names.size(), derive_seed(cfg.seed, 9100 + oi));
            optim::MethodConfig mc;
            mc.method = optim::method_from_name(cfg.optimizers[oi]);
            mc.budget = cfg.budget;
            vqc::train(m, Xs, fm.y, mc, derive_seed(cfg.seed, 9000 + oi));
            vqc::Evaluator ev(m);
            const auto theta = m.theta;
            importance::PredictFn pf = [&ev, &theta](const importance::Matrix& Q) {
                return ev.predict_batch(Q, theta);
            };
            const auto perm = importance::permutation_importance(
                pf, Xs, fm.y, cfg.importance_repeats, derive_seed(cfg.seed, 9200));
            const auto grad = importance::gradient_importance(pf, Xs, cfg.importance_epsilon);

            CsvBuf imp;
            imp.row({"method", "model", "feature", "raw", "normalized", "scaled", "repeats",
                     "epsilon", "degenerate"});
            for (std::size_t j = 0; j < fm.names.size(); ++j)
                imp.row({"permutation", best_qnn, fm.names[j], fmt_num(perm.raw[j]),
                         fmt_num(perm.normalized[j]), "", std::to_string(perm.repeats), "",
                         perm.degenerate ? "1" : "0"});
            for (std::size_t j = 0; j < fm.names.size(); ++j)
                imp.row({"gradient", best_qnn, fm.names[j], fmt_num(grad.raw[j]),
                         fmt_num(grad.normalized[j]), fmt_num(grad.scaled[j]), "",
                         fmt_num(grad.epsilon), grad.degenerate ? "1" : "0"});
            em.write_text("importance.csv", imp.data);
        }

        em.finish();
        std::cout << "compare: " << model_names.size() << " models -> " << cfg.out_dir << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "compare: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace qrisk::runner
