#pragma once
#include <optional>
#include <string>
#include <vector>

namespace qrisk::metrics {

struct RocPoint {
    double threshold;  // +inf for the (0,0) endpoint
    double fpr;
    double tpr;
};

struct RocCurve {
    std::vector<RocPoint> points;  // threshold decreasing; (0,0) first, (1,1) last
    double auc = 0.0;
};

// Classification rule everywhere: predict positive iff p >= threshold.
RocCurve roc_and_auc(const std::vector<double>& probs, const std::vector<int>& labels);

double average_precision(const std::vector<double>& probs, const std::vector<int>& labels);

struct CalibrationLosses {
    double brier = 0.0;
    double log_loss = 0.0;
};

// log_loss clamps probabilities to [1e-12, 1-1e-12] before taking logs.
CalibrationLosses calibration_losses(const std::vector<double>& probs,
                                     const std::vector<int>& labels);

struct PseudoR2 {
    double efron = 0.0;
    double mckelvey_zavoina = 0.0;
    double count = 0.0;  // identical to accuracy at the threshold
};

PseudoR2 pseudo_r2(const std::vector<double>& probs, const std::vector<int>& labels,
                   double threshold);

// Ratios with zero denominators are reported as absent rather than NaN.
struct ConfusionMetrics {
    long tp = 0, fp = 0, tn = 0, fn = 0;
    std::optional<double> sensitivity, specificity, ppv, npv, f1;
    double accuracy = 0.0;
};

ConfusionMetrics confusion_metrics(const std::vector<double>& probs,
                                   const std::vector<int>& labels, double threshold);

struct ThresholdRule {
    enum class Kind { youden, fixed_sensitivity, fbeta } kind = Kind::fixed_sensitivity;
    double sensitivity = 0.83;  // fixed_sensitivity floor
    double beta = 2.0;          // fbeta weight
};

// Candidate thresholds are the observed scores; a threshold above every score
// is never returned. fixed_sensitivity picks the largest threshold whose
// sensitivity reaches the floor (maximizing specificity subject to it); ties
// in youden/fbeta resolve to the larger threshold.
double select_threshold(const std::vector<double>& probs, const std::vector<int>& labels,
                        const ThresholdRule& rule);

struct EvalReport {
    double auc = 0.0;
    double average_precision = 0.0;
    double brier = 0.0;
    double log_loss = 0.0;
    double efron_r2 = 0.0;
    double mz_r2 = 0.0;
    double count_r2 = 0.0;
    double threshold = 0.5;
    double accuracy = 0.0;
    std::optional<double> sensitivity, specificity, ppv, npv, f1;
};

EvalReport evaluate(const std::vector<double>& probs, const std::vector<int>& labels,
                    double threshold);

} // namespace qrisk::metrics
