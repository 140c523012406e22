#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qrisk/util/linalg.hpp"

namespace qrisk::importance {

using Matrix = std::vector<Vec>;
// Batch scorer: rows in, class-1 probabilities out.  Works for any fitted
// probabilistic model (quantum or classical).
using PredictFn = std::function<std::vector<double>(const Matrix&)>;

enum class Method { permutation, gradient };
const char* method_name(Method m);

struct ImportanceReport {
    Method method = Method::permutation;
    std::vector<double> raw;         // permutation: mean AUC drop; gradient: mean |dp| at epsilon
    std::vector<double> normalized;  // negatives floored at 0, then scaled to sum to 1
    std::vector<double> scaled;      // gradient only: raw / epsilon (derivative-style variant)
    bool degenerate = false;         // every floored score was 0; normalized falls back to uniform
    int repeats = 0;                 // permutation only
    double epsilon = 0.0;            // gradient only
    double baseline_auc = 0.0;       // permutation only
};

// Shuffle one feature column at a time (a true permutation, not a bootstrap),
// score the AUC damage, and average over `repeats` independent shuffles.
// Each (feature, repeat) cell draws from its own seed stream, so results do
// not depend on evaluation order.
ImportanceReport permutation_importance(const PredictFn& predict, const Matrix& X,
                                        const std::vector<int>& y, int repeats = 100,
                                        std::uint64_t seed = 0);

// Perturb one feature at a time by +epsilon (standardized units) and average
// the absolute probability change.  `raw` keeps the plain mean |dp| at the
// given epsilon; `scaled` divides by epsilon for the derivative reading.
ImportanceReport gradient_importance(const PredictFn& predict, const Matrix& X,
                                     double epsilon = 0.01);

}  // namespace qrisk::importance
