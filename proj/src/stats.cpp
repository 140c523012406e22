#include "qrisk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qrisk/util/special.hpp"

namespace qrisk::stats {

Chi2Result chi2_test(const Table2x2& t, Correction correction) {
    const double n = t.n();
    if (n <= 0) throw std::invalid_argument("chi2_test: empty table");
    const double r1 = t.a + t.b, r2 = t.c + t.d, c1 = t.a + t.c, c2 = t.b + t.d;
    if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0)
        throw std::invalid_argument("chi2_test: degenerate margin");

    const double min_expected =
        std::min({r1 * c1, r1 * c2, r2 * c1, r2 * c2}) / n;
    bool use_yates = correction == Correction::yates ||
                     (correction == Correction::automatic && min_expected < 5.0);

    const double diff = t.a * t.d - t.b * t.c;
    double num = std::fabs(diff);
    if (use_yates) num = std::max(0.0, num - n / 2.0);
    Chi2Result res;
    res.corrected = use_yates;
    res.statistic = n * num * num / (r1 * r2 * c1 * c2);
    res.p_value = chi2_sf(res.statistic, 1.0);
    return res;
}

RiskRatio relative_risk(const Table2x2& t) {
    if (t.a + t.b == 0 || t.c + t.d == 0)
        throw std::invalid_argument("relative_risk: empty exposure group");
    if (t.a == 0 || t.c == 0)
        throw std::invalid_argument("relative_risk: zero event count");
    RiskRatio res;
    const double p1 = t.a / (t.a + t.b), p0 = t.c / (t.c + t.d);
    res.rr = p1 / p0;
    const double se =
        std::sqrt(1.0 / t.a - 1.0 / (t.a + t.b) + 1.0 / t.c - 1.0 / (t.c + t.d));
    const double l = std::log(res.rr);
    res.ci_low = std::exp(l - 1.96 * se);
    res.ci_high = std::exp(l + 1.96 * se);
    return res;
}

namespace {

// Midranks of the pooled sample, plus the tie-correction term sum(t^3 - t).
std::pair<std::vector<double>, double> midranks(const std::vector<double>& pooled) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    std::vector<double> ranks(n, 0.0);
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && pooled[idx[j]] == pooled[idx[i]]) ++j;
        const double r = (double(i + 1) + double(j)) / 2.0;  // average of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = r;
        const double tsize = double(j - i);
        tie_term += tsize * tsize * tsize - tsize;
        i = j;
    }
    return {ranks, tie_term};
}

} // namespace

MannWhitneyResult mann_whitney(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty()) throw std::invalid_argument("mann_whitney: empty sample");
    const double nx = double(x.size()), ny = double(y.size()), n = nx + ny;
    std::vector<double> pooled = x;
    pooled.insert(pooled.end(), y.begin(), y.end());
    const auto [ranks, tie_term] = midranks(pooled);
    double rx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) rx += ranks[i];
    const double ux = rx - nx * (nx + 1.0) / 2.0;
    const double uy = nx * ny - ux;

    MannWhitneyResult res;
    res.u = std::min(ux, uy);
    const double mean_u = nx * ny / 2.0;
    const double var_u =
        nx * ny / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var_u <= 0.0) {  // everything tied: no evidence either way
        res.z = 0.0;
        res.p_value = 1.0;
        return res;
    }
    res.z = (ux - mean_u) / std::sqrt(var_u);
    res.p_value = normal_two_sided_p(res.z);
    return res;
}

MedianDiffCI median_difference_ci(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty()) throw std::invalid_argument("median_difference_ci: empty sample");
    std::vector<double> diffs;
    diffs.reserve(x.size() * y.size());
    for (double xi : x)
        for (double yj : y) diffs.push_back(xi - yj);
    std::sort(diffs.begin(), diffs.end());

    MedianDiffCI res;
    res.estimate = median(diffs);
    const double nm = double(diffs.size());
    const double nx = double(x.size()), ny = double(y.size());
    const double se = std::sqrt(nx * ny * (nx + ny + 1.0) / 12.0);
    long k = long(std::floor(nm / 2.0 - 1.96 * se));
    k = std::max(0L, std::min(k, long(diffs.size()) / 2 - 1));
    res.ci_low = diffs[k];
    res.ci_high = diffs[diffs.size() - 1 - k];
    return res;
}

namespace {

double bernoulli_loglik(const std::vector<int>& y, const Vec& p) {
    double ll = 0.0;
    const double eps = 1e-12;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double pc = std::clamp(p[i], eps, 1.0 - eps);
        ll += y[i] * std::log(pc) + (1 - y[i]) * std::log(1.0 - pc);
    }
    return ll;
}

double intercept_only_loglik(const std::vector<int>& y) {
    const double n = double(y.size());
    const double k = double(std::count(y.begin(), y.end(), 1));
    if (k == 0 || k == n) return 0.0;
    return k * std::log(k / n) + (n - k) * std::log(1.0 - k / n);
}

} // namespace

LogisticModel logistic_fit(const std::vector<Vec>& X, const std::vector<int>& y,
                           const std::vector<std::string>& names) {
    const std::size_t n = X.size();
    if (n == 0 || n != y.size()) throw std::invalid_argument("logistic_fit: bad inputs");
    const std::size_t k = X[0].size();
    if (names.size() != k) throw std::invalid_argument("logistic_fit: names/covariate mismatch");
    for (const auto& row : X)
        if (row.size() != k) throw std::invalid_argument("logistic_fit: ragged matrix");
    const std::size_t p = k + 1;

    Vec beta(p, 0.0);
    Vec eta(n, 0.0), mu(n, 0.0);
    Mat info(p, p);
    auto design = [&](std::size_t i, std::size_t j) -> double {
        return j == 0 ? 1.0 : X[i][j - 1];
    };

    LogisticModel model;
    model.names = names;
    model.n = n;
    model.null_loglik = intercept_only_loglik(y);

    for (int iter = 0; iter < 200; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double e = beta[0];
            for (std::size_t j = 1; j < p; ++j) e += beta[j] * X[i][j - 1];
            eta[i] = e;
            mu[i] = 1.0 / (1.0 + std::exp(-e));
        }
        Vec score(p, 0.0);
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t i = 0; i < n; ++i) score[j] += design(i, j) * (y[i] - mu[i]);
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = a; b < p; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double w = mu[i] * (1.0 - mu[i]);
                    s += design(i, a) * w * design(i, b);
                }
                info(a, b) = s;
                info(b, a) = s;
            }
        }
        Vec delta;
        try {
            delta = solve(info, score);
        } catch (const std::runtime_error&) {
            throw std::runtime_error("logistic_fit: singular information matrix");
        }
        double max_step = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            beta[j] += delta[j];
            max_step = std::max(max_step, std::fabs(delta[j]));
        }
        if (norm2(beta) > 30.0)
            throw std::runtime_error("logistic_fit: separation detected (diverging coefficients)");
        model.iterations = iter + 1;
        if (max_step < 1e-8) {
            for (std::size_t i = 0; i < n; ++i) {
                double e = beta[0];
                for (std::size_t j = 1; j < p; ++j) e += beta[j] * X[i][j - 1];
                mu[i] = 1.0 / (1.0 + std::exp(-e));
            }
            model.beta = beta;
            model.loglik = bernoulli_loglik(y, mu);
            model.covariance = inverse(info);
            return model;
        }
    }
    throw std::runtime_error("logistic_fit: no convergence in 200 iterations");
}

WaldTest wald_test(const LogisticModel& m, std::size_t coef_index) {
    if (coef_index >= m.beta.size()) throw std::invalid_argument("wald_test: index out of range");
    WaldTest res;
    const double se = std::sqrt(m.covariance(coef_index, coef_index));
    res.z = m.beta[coef_index] / se;
    res.p_value = normal_two_sided_p(res.z);
    return res;
}

LrtResult likelihood_ratio_test(double loglik_full, int params_full, double loglik_reduced,
                                int params_reduced) {
    if (params_full < params_reduced)
        throw std::invalid_argument("likelihood_ratio_test: models not nested");
    LrtResult res;
    res.deviance = 2.0 * (loglik_full - loglik_reduced);
    res.df = params_full - params_reduced;
    res.p_value = chi2_sf(std::max(0.0, res.deviance), double(res.df));
    return res;
}

namespace {

double criterion_value(const LogisticModel& m, StepCriterion crit) {
    const double k = double(m.beta.size());
    if (crit == StepCriterion::aic) return 2.0 * k - 2.0 * m.loglik;
    return k * std::log(double(m.n)) - 2.0 * m.loglik;
}

std::vector<Vec> drop_column(const std::vector<Vec>& X, std::size_t col) {
    std::vector<Vec> out(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
        out[i].reserve(X[i].size() - 1);
        for (std::size_t j = 0; j < X[i].size(); ++j)
            if (j != col) out[i].push_back(X[i][j]);
    }
    return out;
}

} // namespace

LogisticModel stepwise_reduce(const std::vector<Vec>& X, const std::vector<int>& y,
                              const std::vector<std::string>& names, StepCriterion crit) {
    std::vector<Vec> cur_X = X;
    std::vector<std::string> cur_names = names;
    LogisticModel best = logistic_fit(cur_X, y, cur_names);
    double best_crit = criterion_value(best, crit);

    while (!cur_names.empty()) {
        double round_best = best_crit;
        std::size_t drop_idx = cur_names.size();
        LogisticModel round_model;
        for (std::size_t j = 0; j < cur_names.size(); ++j) {
            auto Xj = drop_column(cur_X, j);
            auto nj = cur_names;
            nj.erase(nj.begin() + j);
            LogisticModel mj;
            try {
                mj = logistic_fit(Xj, y, nj);
            } catch (const std::runtime_error&) {
                continue;  // a failing sub-fit is never an improvement
            }
            const double cj = criterion_value(mj, crit);
            if (cj < round_best - 1e-9) {
                round_best = cj;
                drop_idx = j;
                round_model = mj;
            }
        }
        if (drop_idx == cur_names.size()) break;
        cur_X = drop_column(cur_X, drop_idx);
        cur_names.erase(cur_names.begin() + drop_idx);
        best = round_model;
        best_crit = round_best;
    }
    return best;
}

Determination determination_coefficients(const LogisticModel& m) {
    Determination d;
    const double ll = m.loglik, ll0 = m.null_loglik, n = double(m.n);
    // ll >= ll0 for nested MLE fits, so negatives can only be rounding dust
    d.mcfadden = ll0 != 0.0 ? std::max(0.0, 1.0 - ll / ll0) : 0.0;
    d.cox_snell = std::max(0.0, 1.0 - std::exp(2.0 * (ll0 - ll) / n));
    const double cs_max = 1.0 - std::exp(2.0 * ll0 / n);
    d.nagelkerke = cs_max > 0.0 ? d.cox_snell / cs_max : 0.0;
    return d;
}

std::vector<OddsRatio> odds_ratios(const LogisticModel& m, const std::vector<int>& directions) {
    if (directions.size() != m.names.size())
        throw std::invalid_argument("odds_ratios: direction vector size mismatch");
    std::vector<OddsRatio> out;
    for (std::size_t j = 0; j < m.names.size(); ++j) {
        const int dir = directions[j];
        if (dir != 1 && dir != -1)
            throw std::invalid_argument("odds_ratios: directions must be +1/-1");
        OddsRatio o;
        o.name = m.names[j];
        o.direction = dir;
        const double b = m.beta[j + 1] * dir;
        const double se = std::sqrt(m.covariance(j + 1, j + 1));
        o.or_value = std::exp(b);
        o.ci_low = std::exp(b - 1.96 * se);
        o.ci_high = std::exp(b + 1.96 * se);
        out.push_back(o);
    }
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::pair<double, double> quartiles(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("quartiles: empty");
    std::sort(v.begin(), v.end());
    // Linear interpolation between order statistics (type-7 quantiles).
    auto quantile = [&](double q) {
        const double h = q * (double(v.size()) - 1.0);
        const std::size_t lo = std::size_t(std::floor(h));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (h - double(lo)) * (v[hi] - v[lo]);
    };
    return {quantile(0.25), quantile(0.75)};
}

} // namespace qrisk::stats
