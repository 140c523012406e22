#pragma once
#include <string>
#include <vector>

#include "qrisk/util/linalg.hpp"

namespace qrisk::stats {

// 2x2 contingency table laid out as
//            event   no event
// exposed      a        b
// unexposed    c        d
struct Table2x2 {
    double a = 0, b = 0, c = 0, d = 0;
    double n() const { return a + b + c + d; }
};

// Continuity correction policy. `automatic` applies the Yates correction
// exactly when the smallest expected cell count is below 5, which is the
// convention the published clinical tables follow.
enum class Correction { none, yates, automatic };

struct Chi2Result {
    double statistic = 0.0;
    double p_value = 1.0;
    int df = 1;
    bool corrected = false;
};

Chi2Result chi2_test(const Table2x2& t, Correction correction = Correction::automatic);

struct RiskRatio {
    double rr = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;  // 95% CI by the log method with z = 1.96
};

RiskRatio relative_risk(const Table2x2& t);

struct MannWhitneyResult {
    double u = 0.0;  // min(U_x, U_y)
    double z = 0.0;
    double p_value = 1.0;  // two-sided, tie-corrected normal approximation
};

MannWhitneyResult mann_whitney(const std::vector<double>& x, const std::vector<double>& y);

struct MedianDiffCI {
    double estimate = 0.0;  // Hodges-Lehmann median of pairwise differences x_i - y_j
    double ci_low = 0.0;
    double ci_high = 0.0;
};

MedianDiffCI median_difference_ci(const std::vector<double>& x, const std::vector<double>& y);

struct LogisticModel {
    std::vector<std::string> names;  // covariate names; intercept excluded
    Vec beta;                        // beta[0] = intercept, beta[1..] = covariates
    Mat covariance;                  // inverse observed information
    double loglik = 0.0;
    double null_loglik = 0.0;  // intercept-only fit on the same data
    std::size_t n = 0;
    int iterations = 0;
};

// Newton-Raphson MLE; converges when max |delta beta| < 1e-8. Throws on
// separation (diverging ||beta|| > 30) or a singular information matrix.
LogisticModel logistic_fit(const std::vector<Vec>& X, const std::vector<int>& y,
                           const std::vector<std::string>& names);

struct WaldTest {
    double z = 0.0;
    double p_value = 1.0;
};

WaldTest wald_test(const LogisticModel& m, std::size_t coef_index);  // 0 = intercept

struct LrtResult {
    double deviance = 0.0;
    int df = 0;
    double p_value = 1.0;
};

// Full model must nest the reduced one; df = parameter count difference.
LrtResult likelihood_ratio_test(double loglik_full, int params_full, double loglik_reduced,
                                int params_reduced);

enum class StepCriterion { aic, bic };

// Backward elimination: drop the covariate whose removal improves the
// criterion most; stop when no removal improves it.
LogisticModel stepwise_reduce(const std::vector<Vec>& X, const std::vector<int>& y,
                              const std::vector<std::string>& names, StepCriterion crit);

struct Determination {
    double mcfadden = 0.0;
    double cox_snell = 0.0;
    double nagelkerke = 0.0;
};

Determination determination_coefficients(const LogisticModel& m);

struct OddsRatio {
    std::string name;
    double or_value = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int direction = 1;
};

// direction[i] in {+1, -1} declares the risk-increasing category of covariate
// i; the ratio is exp(direction * beta) with the CI endpoints ordered.
std::vector<OddsRatio> odds_ratios(const LogisticModel& m, const std::vector<int>& directions);

double median(std::vector<double> v);
std::pair<double, double> quartiles(std::vector<double> v);  // (q1, q3)

} // namespace qrisk::stats
