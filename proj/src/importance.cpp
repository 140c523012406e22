#include "qrisk/importance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qrisk/metrics.hpp"
#include "qrisk/util/rng.hpp"

namespace qrisk::importance {

namespace {

void finalize_normalization(ImportanceReport& rep) {
    const std::size_t d = rep.raw.size();
    rep.normalized.assign(d, 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        rep.normalized[j] = std::max(rep.raw[j], 0.0);
        total += rep.normalized[j];
    }
    if (total <= 0.0) {
        // nothing moved the model at all; report a flat profile and say so
        rep.degenerate = true;
        std::fill(rep.normalized.begin(), rep.normalized.end(),
                  d > 0 ? 1.0 / static_cast<double>(d) : 0.0);
        return;
    }
    for (double& v : rep.normalized) v /= total;
}

}  // namespace

const char* method_name(Method m) {
    return m == Method::permutation ? "permutation" : "gradient";
}

ImportanceReport permutation_importance(const PredictFn& predict, const Matrix& X,
                                        const std::vector<int>& y, int repeats,
                                        std::uint64_t seed) {
    if (X.empty() || X.size() != y.size())
        throw std::invalid_argument("permutation_importance: X and y must match and be non-empty");
    if (repeats < 1) throw std::invalid_argument("permutation_importance: repeats must be >= 1");
    const std::size_t n = X.size(), d = X.front().size();
    {
        int n1 = 0;
        for (int v : y) n1 += v;
        if (n1 == 0 || n1 == static_cast<int>(n))
            throw std::invalid_argument("permutation_importance: both classes required");
    }

    ImportanceReport rep;
    rep.method = Method::permutation;
    rep.repeats = repeats;
    rep.baseline_auc = metrics::roc_and_auc(predict(X), y).auc;
    rep.raw.assign(d, 0.0);

    Matrix shuffled = X;
    std::vector<std::size_t> perm(n);
    for (std::size_t f = 0; f < d; ++f) {
        double drop_sum = 0.0;
        for (int r = 0; r < repeats; ++r) {
            // one independent stream per (feature, repeat) cell
            auto rng = make_rng(seed, f * static_cast<std::size_t>(repeats) +
                                          static_cast<std::size_t>(r));
            for (std::size_t i = 0; i < n; ++i) perm[i] = i;
            for (std::size_t i = n - 1; i > 0; --i) {
                std::uniform_int_distribution<std::size_t> pick(0, i);
                std::swap(perm[i], perm[pick(rng)]);
            }
            for (std::size_t i = 0; i < n; ++i) shuffled[i][f] = X[perm[i]][f];
            drop_sum += rep.baseline_auc - metrics::roc_and_auc(predict(shuffled), y).auc;
        }
        for (std::size_t i = 0; i < n; ++i) shuffled[i][f] = X[i][f];
        rep.raw[f] = drop_sum / repeats;
    }
    finalize_normalization(rep);
    return rep;
}

ImportanceReport gradient_importance(const PredictFn& predict, const Matrix& X, double epsilon) {
    if (X.empty()) throw std::invalid_argument("gradient_importance: X must be non-empty");
    if (!(epsilon > 0.0)) throw std::invalid_argument("gradient_importance: epsilon must be > 0");
    const std::size_t n = X.size(), d = X.front().size();

    ImportanceReport rep;
    rep.method = Method::gradient;
    rep.epsilon = epsilon;
    rep.raw.assign(d, 0.0);
    rep.scaled.assign(d, 0.0);

    const std::vector<double> base = predict(X);
    Matrix bumped = X;
    for (std::size_t f = 0; f < d; ++f) {
        for (std::size_t i = 0; i < n; ++i) bumped[i][f] = X[i][f] + epsilon;
        const std::vector<double> probe = predict(bumped);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += std::abs(probe[i] - base[i]);
        rep.raw[f] = acc / static_cast<double>(n);
        rep.scaled[f] = rep.raw[f] / epsilon;
        for (std::size_t i = 0; i < n; ++i) bumped[i][f] = X[i][f];
    }
    finalize_normalization(rep);
    return rep;
}

}  // namespace qrisk::importance
