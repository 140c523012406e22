#include "qrisk/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "qrisk/util/csv.hpp"
#include "qrisk/util/rng.hpp"

namespace qrisk::cohort {

const std::vector<std::string> kBinaryColumns = {
    "NOCOIL", "ICG", "ACSP", "PERFB", "DM", "SMOKING",
    "HT",     "ICHS", "KOAG", "CORT",  "SEX", "ASA_GT2"};

const std::vector<std::string> kContinuousColumns = {"CRP", "BMI", "AGE", "HB", "LN"};

Cohort::Cohort()
    : bin_present(kBinaryColumns.size(), true), cont_present(kContinuousColumns.size(), true) {}

int Cohort::binary_index(const std::string& name) {
    const auto it = std::find(kBinaryColumns.begin(), kBinaryColumns.end(), name);
    return it == kBinaryColumns.end() ? -1 : int(it - kBinaryColumns.begin());
}

int Cohort::continuous_index(const std::string& name) {
    const auto it = std::find(kContinuousColumns.begin(), kContinuousColumns.end(), name);
    return it == kContinuousColumns.end() ? -1 : int(it - kContinuousColumns.begin());
}

CohortSpec CohortSpec::published() {
    CohortSpec s;
    s.n_leak = 28;
    s.n_noleak = 172;
    // Encoded value 1 means: tube used (NOCOIL), angiography done (ICG),
    // stapler used (ACSP), good perfusion (PERFB), condition present (DM,
    // SMOKING, HT, ICHS, KOAG, CORT), female (SEX), ASA grade above 2.
    s.binary = {
        {"NOCOIL", 3, 52}, {"ICG", 9, 91},   {"ACSP", 5, 60},  {"PERFB", 25, 160},
        {"DM", 9, 27},     {"SMOKING", 9, 25}, {"HT", 19, 95}, {"ICHS", 3, 18},
        {"KOAG", 1, 8},    {"CORT", 2, 5},   {"SEX", 10, 60},  {"ASA_GT2", 13, 59},
    };
    s.continuous = {
        {"CRP", true, 108, 78, 131, 62, 34, 94},
        {"BMI", false, 28, 24, 31, 26, 24, 29},
        {"AGE", false, 65, 60, 67, 65, 58, 71},
        {"HB", false, 115, 103, 121, 116, 107, 123},
        {"LN", false, 13, 6, 16, 13, 8, 17},
    };
    return s;
}

namespace {

constexpr double kZ75 = 0.6744897501960817;  // standard normal upper quartile

struct GroupDist {
    bool lognormal = false;
    double mu = 0.0, sigma = 0.0;
};

GroupDist calibrate(bool lognormal, double med, double q1, double q3) {
    GroupDist d;
    d.lognormal = lognormal;
    if (lognormal) {
        // Median is exact; sigma solves 2 m sinh(z75 sigma) = IQR so the
        // interquartile width is also matched.
        d.mu = std::log(med);
        d.sigma = std::asinh((q3 - q1) / (2.0 * med)) / kZ75;
    } else {
        d.mu = med;
        d.sigma = (q3 - q1) / (2.0 * kZ75);
    }
    return d;
}

double draw(const GroupDist& d, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(d.mu, d.sigma);
    const double v = gauss(rng);
    return d.lognormal ? std::exp(v) : v;
}

} // namespace

Cohort generate_synthetic(const CohortSpec& spec, std::uint64_t seed) {
    const int n = spec.n_leak + spec.n_noleak;
    Cohort c;
    c.rows.resize(n);
    for (int i = 0; i < n; ++i) {
        c.rows[i].leak = i < spec.n_leak ? 1 : 0;
        c.rows[i].bin.assign(kBinaryColumns.size(), 0);
        c.rows[i].cont.assign(kContinuousColumns.size(), std::nullopt);
    }

    std::uint64_t stream = 1;
    for (const auto& bs : spec.binary) {
        const int col = Cohort::binary_index(bs.name);
        if (col < 0) throw std::invalid_argument("generate_synthetic: unknown column " + bs.name);
        for (int group = 0; group < 2; ++group) {
            const int lo = group == 0 ? 0 : spec.n_leak;
            const int size = group == 0 ? spec.n_leak : spec.n_noleak;
            const int ones = group == 0 ? bs.ones_leak : bs.ones_noleak;
            if (ones < 0 || ones > size)
                throw std::invalid_argument("generate_synthetic: count out of range for " + bs.name);
            std::vector<int> order(size);
            std::iota(order.begin(), order.end(), 0);
            auto rng = make_rng(seed, stream++);
            std::shuffle(order.begin(), order.end(), rng);
            for (int k = 0; k < ones; ++k) c.rows[lo + order[k]].bin[col] = 1;
        }
    }
    for (const auto& cs : spec.continuous) {
        const int col = Cohort::continuous_index(cs.name);
        if (col < 0) throw std::invalid_argument("generate_synthetic: unknown column " + cs.name);
        for (int group = 0; group < 2; ++group) {
            const int lo = group == 0 ? 0 : spec.n_leak;
            const int size = group == 0 ? spec.n_leak : spec.n_noleak;
            const GroupDist dist =
                group == 0 ? calibrate(cs.lognormal, cs.median_leak, cs.q1_leak, cs.q3_leak)
                           : calibrate(cs.lognormal, cs.median_noleak, cs.q1_noleak, cs.q3_noleak);
            auto rng = make_rng(seed, stream++);
            for (int k = 0; k < size; ++k)
                c.rows[lo + k].cont[col] = std::max(0.0, draw(dist, rng));
        }
    }
    return c;
}

namespace {

int parse_binary(const std::string& cell, bool is_label, std::size_t row,
                 const std::string& col) {
    const auto fail = [&]() -> int {
        throw std::runtime_error("csv row " + std::to_string(row) + ", column " + col +
                                 ": expected binary value, got '" + cell + "'");
    };
    if (cell == "0") return 0;
    if (cell == "1") return 1;
    if (is_label && cell == "-1") return 0;  // {-1,1} labels map to {0,1}
    return fail();
}

double parse_number(const std::string& cell, std::size_t row, const std::string& col) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("csv row " + std::to_string(row) + ", column " + col +
                                 ": expected number, got '" + cell + "'");
    }
}

} // namespace

Cohort load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
    const auto header = split_csv_line(line);

    std::vector<int> col_kind(header.size(), -1);  // 0 label, 1 binary, 2 continuous, 3 extra
    std::vector<int> col_target(header.size(), -1);
    Cohort c;
    std::vector<bool> seen_label(1, false);
    std::vector<bool> seen_bin(kBinaryColumns.size(), false);
    std::vector<bool> seen_cont(kContinuousColumns.size(), false);
    for (std::size_t j = 0; j < header.size(); ++j) {
        const std::string& name = header[j];
        if (name == "LEAK") {
            col_kind[j] = 0;
            seen_label[0] = true;
        } else if (int b = Cohort::binary_index(name); b >= 0) {
            col_kind[j] = 1;
            col_target[j] = b;
            seen_bin[b] = true;
        } else if (int k = Cohort::continuous_index(name); k >= 0) {
            col_kind[j] = 2;
            col_target[j] = k;
            seen_cont[k] = true;
        } else {
            col_kind[j] = 3;
            col_target[j] = int(c.extra_names.size());
            c.extra_names.push_back(name);
        }
    }
    if (!seen_label[0]) throw std::runtime_error("csv missing column LEAK");
    // Any subset of the schema columns is accepted; absent ones are flagged
    // so downstream computations refuse to read their default-filled cells.
    for (std::size_t b = 0; b < seen_bin.size(); ++b) c.bin_present[b] = seen_bin[b];
    for (std::size_t k = 0; k < seen_cont.size(); ++k) c.cont_present[k] = seen_cont[k];

    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("csv row " + std::to_string(row_no) + ": expected " +
                                     std::to_string(header.size()) + " cells, got " +
                                     std::to_string(cells.size()));
        Row r;
        r.bin.assign(kBinaryColumns.size(), 0);
        r.cont.assign(kContinuousColumns.size(), std::nullopt);
        r.extras.assign(c.extra_names.size(), "");
        for (std::size_t j = 0; j < cells.size(); ++j) {
            switch (col_kind[j]) {
                case 0:
                    r.leak = parse_binary(cells[j], true, row_no, header[j]);
                    break;
                case 1:
                    r.bin[col_target[j]] = parse_binary(cells[j], false, row_no, header[j]);
                    break;
                case 2:
                    if (!cells[j].empty())
                        r.cont[col_target[j]] = parse_number(cells[j], row_no, header[j]);
                    break;
                default:
                    r.extras[col_target[j]] = cells[j];
            }
        }
        c.rows.push_back(std::move(r));
    }
    return c;
}

void save_csv(const Cohort& c, const std::string& path) {
    CsvWriter w(path);
    std::vector<std::string> header = {"LEAK"};
    for (std::size_t b = 0; b < kBinaryColumns.size(); ++b)
        if (c.bin_present[b]) header.push_back(kBinaryColumns[b]);
    for (std::size_t k = 0; k < kContinuousColumns.size(); ++k)
        if (c.cont_present[k]) header.push_back(kContinuousColumns[k]);
    header.insert(header.end(), c.extra_names.begin(), c.extra_names.end());
    w.row(header);
    for (const auto& r : c.rows) {
        std::vector<std::string> cells = {std::to_string(r.leak)};
        for (std::size_t b = 0; b < r.bin.size(); ++b)
            if (c.bin_present[b]) cells.push_back(std::to_string(r.bin[b]));
        for (std::size_t k = 0; k < r.cont.size(); ++k)
            if (c.cont_present[k]) cells.push_back(r.cont[k] ? fmt_num(*r.cont[k]) : "");
        for (const auto& v : r.extras) cells.push_back(v);
        w.row(cells);
    }
}

stats::Table2x2 crosstab(const Cohort& c, const std::string& binary_name, int exposed_value) {
    const int col = Cohort::binary_index(binary_name);
    if (col < 0) throw std::invalid_argument("crosstab: unknown column " + binary_name);
    if (!c.bin_present[col])
        throw std::invalid_argument("crosstab: column " + binary_name + " not present in cohort");
    stats::Table2x2 t;
    for (const auto& r : c.rows) {
        const bool exposed = r.bin[col] == exposed_value;
        if (exposed && r.leak) t.a += 1;
        else if (exposed) t.b += 1;
        else if (r.leak) t.c += 1;
        else t.d += 1;
    }
    return t;
}

void inject_pair_association(Cohort& c, const std::string& name_a, const std::string& name_b,
                             int leak_group, double target_odds_ratio, std::uint64_t seed) {
    const int ca = Cohort::binary_index(name_a), cb = Cohort::binary_index(name_b);
    if (ca < 0 || cb < 0)
        throw std::invalid_argument("inject_pair_association: unknown column " +
                                    (ca < 0 ? name_a : name_b));
    if (ca == cb) throw std::invalid_argument("inject_pair_association: need two distinct columns");
    if (!c.bin_present[ca] || !c.bin_present[cb])
        throw std::invalid_argument("inject_pair_association: column " +
                                    (!c.bin_present[ca] ? name_a : name_b) + " not present in cohort");
    if (!(target_odds_ratio > 0.0))
        throw std::invalid_argument("inject_pair_association: odds ratio must be positive");

    std::vector<std::size_t> group;
    int na = 0, nb = 0;
    for (std::size_t i = 0; i < c.rows.size(); ++i)
        if (c.rows[i].leak == leak_group) {
            group.push_back(i);
            na += c.rows[i].bin[ca];
            nb += c.rows[i].bin[cb];
        }
    const int n = static_cast<int>(group.size());
    if (n == 0) return;

    // pick the joint count n11 whose (half-corrected) odds ratio is closest
    // to the target on the log scale; margins fix the other three cells
    const int lo = std::max(0, na + nb - n), hi = std::min(na, nb);
    int best11 = lo;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int n11 = lo; n11 <= hi; ++n11) {
        const double h11 = n11 + 0.5, h10 = na - n11 + 0.5, h01 = nb - n11 + 0.5,
                     h00 = n - na - nb + n11 + 0.5;
        const double gap = std::abs(std::log(h11 * h00 / (h10 * h01)) - std::log(target_odds_ratio));
        if (gap < best_gap) {
            best_gap = gap;
            best11 = n11;
        }
    }

    auto rng = make_rng(seed, 0);
    std::vector<std::size_t> order = group;
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(order[i], order[pick(rng)]);
    }
    // first na shuffled rows carry a=1; of those, the first best11 also carry
    // b=1; the remaining b-ones go to the earliest a=0 rows
    int left_b_in_a = best11, left_b_out = nb - best11;
    for (int r = 0; r < n; ++r) {
        Row& row = c.rows[order[static_cast<std::size_t>(r)]];
        const bool a_one = r < na;
        row.bin[ca] = a_one ? 1 : 0;
        int b_one = 0;
        if (a_one && left_b_in_a > 0) {
            b_one = 1;
            --left_b_in_a;
        } else if (!a_one && left_b_out > 0) {
            b_one = 1;
            --left_b_out;
        }
        row.bin[cb] = b_one;
    }
}

std::vector<double> continuous_values(const Cohort& c, const std::string& name, int leak_group) {
    const int col = Cohort::continuous_index(name);
    if (col < 0) throw std::invalid_argument("continuous_values: unknown column " + name);
    if (!c.cont_present[col])
        throw std::invalid_argument("continuous_values: column " + name + " not present in cohort");
    std::vector<double> out;
    for (const auto& r : c.rows)
        if (r.leak == leak_group && r.cont[col]) out.push_back(*r.cont[col]);
    return out;
}

FeatureMatrix build_features(const Cohort& c, const std::vector<std::string>& feature_names) {
    FeatureMatrix fm;
    fm.names = feature_names;
    std::vector<std::pair<int, int>> cols;  // (kind: 0 binary / 1 continuous, index)
    for (const auto& name : feature_names) {
        if (int b = Cohort::binary_index(name); b >= 0) {
            if (!c.bin_present[b])
                throw std::invalid_argument("build_features: column " + name + " not present in cohort");
            cols.emplace_back(0, b);
        } else if (int k = Cohort::continuous_index(name); k >= 0) {
            if (!c.cont_present[k])
                throw std::invalid_argument("build_features: column " + name + " not present in cohort");
            cols.emplace_back(1, k);
        } else {
            throw std::invalid_argument("build_features: unknown feature " + name);
        }
    }
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
        const auto& r = c.rows[i];
        Vec x;
        x.reserve(cols.size());
        bool missing = false;
        for (const auto& [kind, idx] : cols) {
            if (kind == 0) {
                x.push_back(double(r.bin[idx]));
            } else if (r.cont[idx]) {
                x.push_back(*r.cont[idx]);
            } else {
                missing = true;
                break;
            }
        }
        if (missing) {
            fm.rejected_rows.push_back(i);
            continue;
        }
        fm.X.push_back(std::move(x));
        fm.y.push_back(r.leak);
    }
    return fm;
}

Standardizer Standardizer::fit(const std::vector<Vec>& X) {
    if (X.empty()) throw std::invalid_argument("Standardizer: empty matrix");
    const std::size_t k = X[0].size();
    Standardizer s;
    s.mean.assign(k, 0.0);
    s.stddev.assign(k, 0.0);
    s.constant.assign(k, false);
    const double n = double(X.size());
    for (const auto& row : X)
        for (std::size_t j = 0; j < k; ++j) s.mean[j] += row[j];
    for (auto& m : s.mean) m /= n;
    for (const auto& row : X)
        for (std::size_t j = 0; j < k; ++j)
            s.stddev[j] += (row[j] - s.mean[j]) * (row[j] - s.mean[j]);
    for (std::size_t j = 0; j < k; ++j) {
        s.stddev[j] = std::sqrt(s.stddev[j] / n);
        if (s.stddev[j] < 1e-12) {
            s.stddev[j] = 1.0;
            s.constant[j] = true;
        }
    }
    return s;
}

std::vector<Vec> Standardizer::transform(const std::vector<Vec>& X) const {
    std::vector<Vec> out(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
        out[i].resize(X[i].size());
        for (std::size_t j = 0; j < X[i].size(); ++j)
            out[i][j] = constant[j] ? 0.0 : (X[i][j] - mean[j]) / stddev[j];
    }
    return out;
}

std::vector<OuterFold> make_folds(std::size_t n, int n_outer, int n_inner, std::uint64_t seed) {
    if (n_outer < 2 || std::size_t(n_outer) > n)
        throw std::invalid_argument("make_folds: bad outer fold count");
    if (n_inner < 2) throw std::invalid_argument("make_folds: bad inner fold count");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(seed, 0);
    std::shuffle(order.begin(), order.end(), rng);

    auto blocks = [](const std::vector<std::size_t>& seq, int k) {
        std::vector<std::vector<std::size_t>> out(k);
        const std::size_t base = seq.size() / k, extra = seq.size() % k;
        std::size_t pos = 0;
        for (int b = 0; b < k; ++b) {
            const std::size_t len = base + (std::size_t(b) < extra ? 1 : 0);
            out[b].assign(seq.begin() + pos, seq.begin() + pos + len);
            pos += len;
        }
        return out;
    };

    const auto outer_blocks = blocks(order, n_outer);
    std::vector<OuterFold> folds(n_outer);
    for (int f = 0; f < n_outer; ++f) {
        folds[f].test = outer_blocks[f];
        for (int g = 0; g < n_outer; ++g)
            if (g != f)
                folds[f].train.insert(folds[f].train.end(), outer_blocks[g].begin(),
                                      outer_blocks[g].end());
        const auto inner_blocks = blocks(folds[f].train, n_inner);
        for (int g = 0; g < n_inner; ++g) {
            std::vector<std::size_t> tr;
            for (int h = 0; h < n_inner; ++h)
                if (h != g) tr.insert(tr.end(), inner_blocks[h].begin(), inner_blocks[h].end());
            folds[f].inner.emplace_back(std::move(tr), inner_blocks[g]);
        }
    }
    return folds;
}

} // namespace qrisk::cohort
