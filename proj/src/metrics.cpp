#include "qrisk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace qrisk::metrics {

namespace {

void check_inputs(const std::vector<double>& probs, const std::vector<int>& labels,
                  bool need_both_classes) {
    if (probs.size() != labels.size()) throw std::invalid_argument("metrics: size mismatch");
    if (probs.empty()) throw std::invalid_argument("metrics: empty input");
    for (int y : labels)
        if (y != 0 && y != 1) throw std::invalid_argument("metrics: labels must be 0/1");
    if (need_both_classes) {
        const long pos = std::count(labels.begin(), labels.end(), 1);
        if (pos == 0 || pos == long(labels.size()))
            throw std::invalid_argument("metrics: both classes required");
    }
}

// Indices sorted by score descending; equal scores form one threshold step.
std::vector<std::size_t> descending_order(const std::vector<double>& probs) {
    std::vector<std::size_t> idx(probs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    return idx;
}

} // namespace

RocCurve roc_and_auc(const std::vector<double>& probs, const std::vector<int>& labels) {
    check_inputs(probs, labels, true);
    const auto idx = descending_order(probs);
    const double n_pos = double(std::count(labels.begin(), labels.end(), 1));
    const double n_neg = double(labels.size()) - n_pos;

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    double tp = 0.0, fp = 0.0, auc = 0.0, prev_tpr = 0.0, prev_fpr = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const double score = probs[idx[i]];
        // Consume the whole tie group: ties move along both axes simultaneously.
        while (i < idx.size() && probs[idx[i]] == score) {
            if (labels[idx[i]] == 1)
                ++tp;
            else
                ++fp;
            ++i;
        }
        const double tpr = tp / n_pos, fpr = fp / n_neg;
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        curve.points.push_back({score, fpr, tpr});
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    curve.auc = auc;
    return curve;
}

double average_precision(const std::vector<double>& probs, const std::vector<int>& labels) {
    check_inputs(probs, labels, true);
    const auto idx = descending_order(probs);
    const double n_pos = double(std::count(labels.begin(), labels.end(), 1));
    double tp = 0.0, seen = 0.0, prev_recall = 0.0, ap = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const double score = probs[idx[i]];
        while (i < idx.size() && probs[idx[i]] == score) {
            if (labels[idx[i]] == 1) ++tp;
            ++seen;
            ++i;
        }
        const double recall = tp / n_pos, precision = tp / seen;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

CalibrationLosses calibration_losses(const std::vector<double>& probs,
                                     const std::vector<int>& labels) {
    check_inputs(probs, labels, false);
    CalibrationLosses out;
    const double eps = 1e-12;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        const double y = labels[i];
        out.brier += (p - y) * (p - y);
        const double pc = std::clamp(p, eps, 1.0 - eps);
        out.log_loss += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
    }
    out.brier /= double(probs.size());
    out.log_loss /= double(probs.size());
    return out;
}

PseudoR2 pseudo_r2(const std::vector<double>& probs, const std::vector<int>& labels,
                   double threshold) {
    check_inputs(probs, labels, false);
    const double n = double(probs.size());
    const double ybar = std::accumulate(labels.begin(), labels.end(), 0.0) / n;

    PseudoR2 out;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        ss_res += (labels[i] - probs[i]) * (labels[i] - probs[i]);
        ss_tot += (labels[i] - ybar) * (labels[i] - ybar);
    }
    if (ss_tot <= 0.0)
        throw std::invalid_argument("pseudo_r2: labels are constant");
    out.efron = 1.0 - ss_res / ss_tot;

    // Latent index of sample i is logit(p_i); the residual variance of the
    // logistic latent model is pi^2/3.
    const double eps = 1e-12;
    std::vector<double> index(probs.size());
    double mean_idx = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double pc = std::clamp(probs[i], eps, 1.0 - eps);
        index[i] = std::log(pc / (1.0 - pc));
        mean_idx += index[i];
    }
    mean_idx /= n;
    double var_idx = 0.0;
    for (double v : index) var_idx += (v - mean_idx) * (v - mean_idx);
    var_idx /= n;
    const double pi2_3 = std::numbers::pi * std::numbers::pi / 3.0;
    out.mckelvey_zavoina = var_idx / (var_idx + pi2_3);

    long correct = 0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        if ((probs[i] >= threshold ? 1 : 0) == labels[i]) ++correct;
    out.count = double(correct) / n;
    return out;
}

ConfusionMetrics confusion_metrics(const std::vector<double>& probs,
                                   const std::vector<int>& labels, double threshold) {
    check_inputs(probs, labels, false);
    ConfusionMetrics m;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const bool pred = probs[i] >= threshold;
        if (pred && labels[i] == 1) ++m.tp;
        else if (pred && labels[i] == 0) ++m.fp;
        else if (!pred && labels[i] == 0) ++m.tn;
        else ++m.fn;
    }
    const auto ratio = [](long num, long den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return double(num) / double(den);
    };
    m.sensitivity = ratio(m.tp, m.tp + m.fn);
    m.specificity = ratio(m.tn, m.tn + m.fp);
    m.ppv = ratio(m.tp, m.tp + m.fp);
    m.npv = ratio(m.tn, m.tn + m.fn);
    m.accuracy = double(m.tp + m.tn) / double(probs.size());
    if (m.sensitivity && m.ppv && (*m.sensitivity + *m.ppv) > 0.0)
        m.f1 = 2.0 * *m.ppv * *m.sensitivity / (*m.ppv + *m.sensitivity);
    else if (m.tp + m.fp + m.fn > 0)
        m.f1 = 0.0;
    return m;
}

double select_threshold(const std::vector<double>& probs, const std::vector<int>& labels,
                        const ThresholdRule& rule) {
    check_inputs(probs, labels, true);
    std::vector<double> cand = probs;
    std::sort(cand.begin(), cand.end(), std::greater<>());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    const double n_pos = double(std::count(labels.begin(), labels.end(), 1));
    const double n_neg = double(labels.size()) - n_pos;

    double best_t = cand.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (double t : cand) {  // descending, so ties keep the larger threshold
        double tp = 0, fp = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] >= t) {
                if (labels[i] == 1) ++tp;
                else ++fp;
            }
        }
        const double sens = tp / n_pos;
        switch (rule.kind) {
            case ThresholdRule::Kind::youden: {
                const double j = sens - fp / n_neg;
                if (j > best_score) {
                    best_score = j;
                    best_t = t;
                }
                break;
            }
            case ThresholdRule::Kind::fixed_sensitivity:
                if (sens >= rule.sensitivity) return t;  // first hit is the largest threshold
                break;
            case ThresholdRule::Kind::fbeta: {
                if (tp + fp == 0) break;
                const double prec = tp / (tp + fp);
                const double b2 = rule.beta * rule.beta;
                if (prec + sens == 0.0) break;
                const double fb = (1.0 + b2) * prec * sens / (b2 * prec + sens);
                if (fb > best_score) {
                    best_score = fb;
                    best_t = t;
                }
                break;
            }
        }
    }
    if (rule.kind == ThresholdRule::Kind::fixed_sensitivity)
        throw std::invalid_argument("select_threshold: sensitivity floor unattainable");
    return best_t;
}

EvalReport evaluate(const std::vector<double>& probs, const std::vector<int>& labels,
                    double threshold) {
    EvalReport r;
    const auto roc = roc_and_auc(probs, labels);
    r.auc = roc.auc;
    r.average_precision = average_precision(probs, labels);
    const auto cal = calibration_losses(probs, labels);
    r.brier = cal.brier;
    r.log_loss = cal.log_loss;
    const auto p2 = pseudo_r2(probs, labels, threshold);
    r.efron_r2 = p2.efron;
    r.mz_r2 = p2.mckelvey_zavoina;
    r.count_r2 = p2.count;
    r.threshold = threshold;
    const auto cm = confusion_metrics(probs, labels, threshold);
    r.accuracy = cm.accuracy;
    r.sensitivity = cm.sensitivity;
    r.specificity = cm.specificity;
    r.ppv = cm.ppv;
    r.npv = cm.npv;
    r.f1 = cm.f1;
    return r;
}

} // namespace qrisk::metrics
