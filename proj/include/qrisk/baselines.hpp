#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qrisk/util/linalg.hpp"

namespace qrisk::baselines {

using Matrix = std::vector<Vec>;

enum class Family { logreg, lda, gnb, knn, adaboost, mlp };

const char* family_name(Family f);
Family family_from_name(const std::string& name);

// One concrete hyperparameter assignment within a family.
struct ClassifierSpec {
    Family family = Family::logreg;
    // logreg
    double C = 1.0;
    bool l1 = false;
    // knn
    int k = 5;
    bool distance_weights = false;
    // lda; both solvers yield the same pooled-covariance discriminant,
    // the label is kept so configs and summaries round-trip faithfully
    bool lsqr_solver = false;
    // adaboost (shares learning_rate with mlp)
    int n_estimators = 50;
    // mlp
    int hidden = 16;
    double learning_rate = 0.05;
    int epochs = 500;
    std::uint64_t seed = 0;

    std::string describe() const;
};

struct FittedClassifier {
    ClassifierSpec spec;
    std::function<std::vector<double>(const Matrix&)> predict_proba;  // p(class 1) per row
    bool flipped = false;  // probabilities were complemented post-fit
};

FittedClassifier fit(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y);

// The default hyperparameter grid searched per family.
std::vector<ClassifierSpec> default_grid(Family f);

struct GridSearchResult {
    ClassifierSpec best;
    double best_mean_auc = 0.0;
    std::vector<std::pair<ClassifierSpec, double>> scored;  // grid order preserved
};

// Exhaustive search over the grid: mean AUC across seeded inner folds;
// ties keep the earliest grid entry.
GridSearchResult grid_search(
    Family f, const Matrix& X, const std::vector<int>& y,
    const std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>& inner_folds);

// If the fitted model scores AUC < 0.5 on the given data, complement its
// probabilities (the published protocol applies this on the test fold).
void flip_if_auc_below_half(FittedClassifier& clf, const Matrix& X, const std::vector<int>& y);

} // namespace qrisk::baselines
