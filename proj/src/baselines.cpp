#include "qrisk/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "qrisk/metrics.hpp"
#include "qrisk/util/rng.hpp"

namespace qrisk::baselines {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_xy(const Matrix& X, const std::vector<int>& y) {
    if (X.empty() || X.size() != y.size())
        throw std::invalid_argument("baselines: X and y must be non-empty and the same length");
    const std::size_t d = X.front().size();
    for (const auto& row : X)
        if (row.size() != d) throw std::invalid_argument("baselines: ragged feature matrix");
    int n1 = 0;
    for (int v : y) {
        if (v != 0 && v != 1) throw std::invalid_argument("baselines: labels must be 0/1");
        n1 += v;
    }
    if (n1 == 0 || n1 == static_cast<int>(y.size()))
        throw std::invalid_argument("baselines: both classes must be present to fit");
}

std::size_t n_features(const Matrix& X) { return X.front().size(); }

// ---------------------------------------------------------------------------
// Logistic regression.  L2 fits by Newton iterations on the penalized
// likelihood (ridge term lambda = 1/C on every coefficient except the
// intercept).  L1 fits by FISTA proximal gradient with soft-thresholding,
// again leaving the intercept unpenalized.  Both use the sum (not mean)
// log-loss so lambda = 1/C matches the usual C-parameterization.
// ---------------------------------------------------------------------------
Vec logreg_l2_train(const Matrix& X, const std::vector<int>& y, double C) {
    const std::size_t n = X.size(), d = n_features(X), p = d + 1;
    const double lambda = 1.0 / C;
    Vec beta(p, 0.0);
    for (int iter = 0; iter < 200; ++iter) {
        Vec grad(p, 0.0);
        Mat H(p, p);
        for (std::size_t i = 0; i < n; ++i) {
            double z = beta[0];
            for (std::size_t j = 0; j < d; ++j) z += beta[j + 1] * X[i][j];
            const double mu = sigmoid(z);
            const double r = mu - static_cast<double>(y[i]);
            const double w = std::max(mu * (1.0 - mu), 1e-12);
            grad[0] += r;
            for (std::size_t j = 0; j < d; ++j) grad[j + 1] += r * X[i][j];
            H(0, 0) += w;
            for (std::size_t j = 0; j < d; ++j) {
                H(0, j + 1) += w * X[i][j];
                H(j + 1, 0) += w * X[i][j];
                for (std::size_t k = 0; k < d; ++k) H(j + 1, k + 1) += w * X[i][j] * X[i][k];
            }
        }
        for (std::size_t j = 1; j < p; ++j) {
            grad[j] += lambda * beta[j];
            H(j, j) += lambda;
        }
        const Vec step = solve(H, grad);
        double worst = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            beta[j] -= step[j];
            worst = std::max(worst, std::abs(step[j]));
        }
        if (worst < 1e-10) break;
    }
    return beta;
}

Vec logreg_l1_train(const Matrix& X, const std::vector<int>& y, double C) {
    const std::size_t n = X.size(), d = n_features(X), p = d + 1;
    const double lambda = 1.0 / C;
    // Lipschitz bound for the sum-log-loss gradient: trace(X'X)/4 including
    // the intercept column of ones.
    double tr = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) tr += X[i][j] * X[i][j];
    const double step = 4.0 / std::max(tr, 1e-12);

    auto grad_nll = [&](const Vec& b, Vec& g) {
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double z = b[0];
            for (std::size_t j = 0; j < d; ++j) z += b[j + 1] * X[i][j];
            const double r = sigmoid(z) - static_cast<double>(y[i]);
            g[0] += r;
            for (std::size_t j = 0; j < d; ++j) g[j + 1] += r * X[i][j];
        }
    };
    auto soft = [](double v, double t) {
        if (v > t) return v - t;
        if (v < -t) return v + t;
        return 0.0;
    };

    Vec beta(p, 0.0), momentum = beta, g(p, 0.0);
    double t_acc = 1.0;
    for (int iter = 0; iter < 20000; ++iter) {
        grad_nll(momentum, g);
        Vec next(p);
        next[0] = momentum[0] - step * g[0];
        for (std::size_t j = 1; j < p; ++j)
            next[j] = soft(momentum[j] - step * g[j], step * lambda);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_acc * t_acc));
        double worst = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            momentum[j] = next[j] + (t_acc - 1.0) / t_next * (next[j] - beta[j]);
            worst = std::max(worst, std::abs(next[j] - beta[j]));
        }
        beta = next;
        t_acc = t_next;
        if (worst < 1e-10) break;
    }
    return beta;
}

FittedClassifier fit_logreg(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y) {
    const Vec beta = spec.l1 ? logreg_l1_train(X, y, spec.C) : logreg_l2_train(X, y, spec.C);
    FittedClassifier clf;
    clf.spec = spec;
    clf.predict_proba = [beta](const Matrix& Q) {
        std::vector<double> out(Q.size());
        for (std::size_t i = 0; i < Q.size(); ++i) {
            double z = beta[0];
            for (std::size_t j = 0; j < Q[i].size(); ++j) z += beta[j + 1] * Q[i][j];
            out[i] = sigmoid(z);
        }
        return out;
    };
    return clf;
}

// ---------------------------------------------------------------------------
// Linear discriminant analysis with a pooled class covariance.  The class-1
// posterior is the sigmoid of the discriminant-score difference.  A tiny
// ridge is added only if the pooled covariance is numerically singular.
// ---------------------------------------------------------------------------
FittedClassifier fit_lda(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y) {
    const std::size_t n = X.size(), d = n_features(X);
    std::size_t n1 = 0;
    for (int v : y) n1 += static_cast<std::size_t>(v);
    const std::size_t n0 = n - n1;
    if (n0 < 2 || n1 < 2)
        throw std::invalid_argument("lda: each class needs at least 2 samples");

    Vec mu0(d, 0.0), mu1(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        Vec& mu = y[i] ? mu1 : mu0;
        for (std::size_t j = 0; j < d; ++j) mu[j] += X[i][j];
    }
    for (std::size_t j = 0; j < d; ++j) {
        mu0[j] /= static_cast<double>(n0);
        mu1[j] /= static_cast<double>(n1);
    }
    Mat S(d, d);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec& mu = y[i] ? mu1 : mu0;
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t k = 0; k < d; ++k)
                S(j, k) += (X[i][j] - mu[j]) * (X[i][k] - mu[k]);
    }
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = 0; k < d; ++k) S(j, k) /= static_cast<double>(n - 2);

    Vec w;       // Sigma^{-1} (mu1 - mu0)
    Vec diff(d);
    for (std::size_t j = 0; j < d; ++j) diff[j] = mu1[j] - mu0[j];
    for (int attempt = 0;; ++attempt) {
        try {
            w = solve(S, diff);
            break;
        } catch (const std::exception&) {
            if (attempt >= 3) throw;
            double scale = 0.0;
            for (std::size_t j = 0; j < d; ++j) scale = std::max(scale, std::abs(S(j, j)));
            const double jitter = std::max(scale, 1.0) * 1e-9 * std::pow(10.0, attempt);
            for (std::size_t j = 0; j < d; ++j) S(j, j) += jitter;
        }
    }
    // delta1 - delta0 = w.x - 0.5 w.(mu1 + mu0) + ln(pi1/pi0)
    double bias = std::log(static_cast<double>(n1) / static_cast<double>(n0));
    for (std::size_t j = 0; j < d; ++j) bias -= 0.5 * w[j] * (mu1[j] + mu0[j]);

    FittedClassifier clf;
    clf.spec = spec;
    clf.predict_proba = [w, bias](const Matrix& Q) {
        std::vector<double> out(Q.size());
        for (std::size_t i = 0; i < Q.size(); ++i) {
            double z = bias;
            for (std::size_t j = 0; j < Q[i].size(); ++j) z += w[j] * Q[i][j];
            out[i] = sigmoid(z);
        }
        return out;
    };
    return clf;
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes: per-class, per-feature normal likelihoods with a
// 1e-9 variance floor; posterior computed in log space.
// ---------------------------------------------------------------------------
FittedClassifier fit_gnb(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y) {
    const std::size_t n = X.size(), d = n_features(X);
    std::size_t n1 = 0;
    for (int v : y) n1 += static_cast<std::size_t>(v);
    const std::size_t n0 = n - n1;

    Matrix mu(2, Vec(d, 0.0)), var(2, Vec(d, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mu[static_cast<std::size_t>(y[i])][j] += X[i][j];
    for (std::size_t j = 0; j < d; ++j) {
        mu[0][j] /= static_cast<double>(n0);
        mu[1][j] /= static_cast<double>(n1);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double r = X[i][j] - mu[static_cast<std::size_t>(y[i])][j];
            var[static_cast<std::size_t>(y[i])][j] += r * r;
        }
    for (std::size_t j = 0; j < d; ++j) {
        var[0][j] = std::max(var[0][j] / static_cast<double>(n0), 1e-9);
        var[1][j] = std::max(var[1][j] / static_cast<double>(n1), 1e-9);
    }
    const double lp0 = std::log(static_cast<double>(n0) / static_cast<double>(n)),
                 lp1 = std::log(static_cast<double>(n1) / static_cast<double>(n));

    FittedClassifier clf;
    clf.spec = spec;
    clf.predict_proba = [mu, var, lp0, lp1](const Matrix& Q) {
        std::vector<double> out(Q.size());
        for (std::size_t i = 0; i < Q.size(); ++i) {
            double s0 = lp0, s1 = lp1;
            for (std::size_t j = 0; j < Q[i].size(); ++j) {
                const double r0 = Q[i][j] - mu[0][j], r1 = Q[i][j] - mu[1][j];
                s0 += -0.5 * std::log(2.0 * 3.14159265358979323846 * var[0][j]) -
                      r0 * r0 / (2.0 * var[0][j]);
                s1 += -0.5 * std::log(2.0 * 3.14159265358979323846 * var[1][j]) -
                      r1 * r1 / (2.0 * var[1][j]);
            }
            // softmax over the two log posteriors
            const double m = std::max(s0, s1);
            const double e0 = std::exp(s0 - m), e1 = std::exp(s1 - m);
            out[i] = e1 / (e0 + e1);
        }
        return out;
    };
    return clf;
}

// ---------------------------------------------------------------------------
// K-nearest neighbors with Euclidean distance.  Distance weighting follows
// the usual convention: when any neighbor sits at distance zero, only the
// zero-distance neighbors vote (equally).
// ---------------------------------------------------------------------------
FittedClassifier fit_knn(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y) {
    if (spec.k < 1) throw std::invalid_argument("knn: k must be >= 1");
    const int k = std::min<int>(spec.k, static_cast<int>(X.size()));
    const bool dist_w = spec.distance_weights;
    const Matrix train_x = X;
    const std::vector<int> train_y = y;

    FittedClassifier clf;
    clf.spec = spec;
    clf.predict_proba = [train_x, train_y, k, dist_w](const Matrix& Q) {
        std::vector<double> out(Q.size());
        std::vector<std::pair<double, std::size_t>> dist(train_x.size());
        for (std::size_t qi = 0; qi < Q.size(); ++qi) {
            for (std::size_t i = 0; i < train_x.size(); ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < Q[qi].size(); ++j) {
                    const double r = Q[qi][j] - train_x[i][j];
                    s += r * r;
                }
                dist[i] = {std::sqrt(s), i};
            }
            std::sort(dist.begin(), dist.end());
            bool any_zero = false;
            for (int t = 0; t < k; ++t)
                if (dist[static_cast<std::size_t>(t)].first < 1e-12) any_zero = true;
            double num = 0.0, den = 0.0;
            for (int t = 0; t < k; ++t) {
                const auto& [dv, idx] = dist[static_cast<std::size_t>(t)];
                double w = 1.0;
                if (dist_w) {
                    if (any_zero)
                        w = dv < 1e-12 ? 1.0 : 0.0;
                    else
                        w = 1.0 / dv;
                }
                num += w * train_y[idx];
                den += w;
            }
            out[qi] = den > 0.0 ? num / den : 0.5;
        }
        return out;
    };
    return clf;
}

// ---------------------------------------------------------------------------
// AdaBoost (SAMME) over depth-1 decision stumps.  The stump search scans
// every feature and every midpoint threshold with both polarities using
// prefix sums of the sample weights.  The class-1 probability is the
// sigmoid of twice the weighted stump margin.
// ---------------------------------------------------------------------------
struct Stump {
    std::size_t feature = 0;
    double threshold = 0.0;
    int polarity = 1;  // +1: predict +1 when x > threshold; -1: flipped

    int predict(const Vec& x) const {
        const int raw = x[feature] > threshold ? 1 : -1;
        return raw * polarity;
    }
};

Stump best_stump(const Matrix& X, const std::vector<int>& t, const Vec& w, double* err_out) {
    const std::size_t n = X.size(), d = n_features(X);
    Stump best;
    double best_err = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < d; ++j) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return X[a][j] < X[b][j]; });
        // err(threshold below all, polarity +1) = weighted share of t == -1
        double err_plus = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (t[i] == -1) err_plus += w[i];
        auto consider = [&](double thr, double ep) {
            if (ep < best_err - 1e-15) {
                best_err = ep;
                best = Stump{j, thr, 1};
            }
            if (1.0 - ep < best_err - 1e-15) {
                best_err = 1.0 - ep;
                best = Stump{j, thr, -1};
            }
        };
        const double lo = X[order.front()][j];
        consider(lo - 1.0, err_plus);
        for (std::size_t r = 0; r < n; ++r) {
            const std::size_t i = order[r];
            // moving sample i to the "<= threshold" side (predicted -1)
            err_plus += t[i] == -1 ? -w[i] : w[i];
            if (r + 1 < n) {
                const double a = X[i][j], b = X[order[r + 1]][j];
                if (b > a + 1e-15) consider(0.5 * (a + b), err_plus);
            } else {
                consider(X[i][j] + 1.0, err_plus);
            }
        }
    }
    *err_out = best_err;
    return best;
}

FittedClassifier fit_adaboost(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y) {
    const std::size_t n = X.size();
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = y[i] ? 1 : -1;
    Vec w(n, 1.0 / static_cast<double>(n));

    std::vector<Stump> stumps;
    Vec alphas;
    for (int m = 0; m < spec.n_estimators; ++m) {
        double err = 0.0;
        const Stump s = best_stump(X, t, w, &err);
        if (err >= 0.5) break;  // no better-than-chance stump remains
        const double clamped = std::max(err, 1e-12);
        const double alpha = spec.learning_rate * std::log((1.0 - clamped) / clamped);
        stumps.push_back(s);
        alphas.push_back(alpha);
        if (err < 1e-12) break;  // perfect stump; further rounds are moot
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (s.predict(X[i]) != t[i]) w[i] *= std::exp(alpha);
            total += w[i];
        }
        for (double& wi : w) wi /= total;
    }
    if (stumps.empty()) {
        // fall back to the prior when even one stump cannot beat chance
        double p1 = 0.0;
        for (int v : y) p1 += v;
        p1 /= static_cast<double>(n);
        FittedClassifier clf;
        clf.spec = spec;
        clf.predict_proba = [p1](const Matrix& Q) { return std::vector<double>(Q.size(), p1); };
        return clf;
    }

    FittedClassifier clf;
    clf.spec = spec;
    clf.predict_proba = [stumps, alphas](const Matrix& Q) {
        std::vector<double> out(Q.size());
        for (std::size_t i = 0; i < Q.size(); ++i) {
            double margin = 0.0;
            for (std::size_t m = 0; m < stumps.size(); ++m)
                margin += alphas[m] * stumps[m].predict(Q[i]);
            out[i] = sigmoid(2.0 * margin);
        }
        return out;
    };
    return clf;
}

// ---------------------------------------------------------------------------
// Single-hidden-layer MLP, logistic activations throughout, full-batch
// gradient descent on the mean log-loss.  Deterministic given the seed.
// ---------------------------------------------------------------------------
FittedClassifier fit_mlp(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y) {
    const std::size_t n = X.size(), d = n_features(X);
    const std::size_t h = static_cast<std::size_t>(std::max(spec.hidden, 1));
    auto rng = make_rng(spec.seed, 0);
    const double w1_scale = 1.0 / std::sqrt(static_cast<double>(d));
    const double w2_scale = 1.0 / std::sqrt(static_cast<double>(h));
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    Matrix W1(h, Vec(d));
    Vec b1(h, 0.0), W2(h), a1(h), z1(h);
    double b2 = 0.0;
    for (auto& row : W1)
        for (double& v : row) v = u(rng) * w1_scale;
    for (double& v : W2) v = u(rng) * w2_scale;

    Matrix gW1(h, Vec(d));
    Vec gb1(h), gW2(h);
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        for (auto& row : gW1) std::fill(row.begin(), row.end(), 0.0);
        std::fill(gb1.begin(), gb1.end(), 0.0);
        std::fill(gW2.begin(), gW2.end(), 0.0);
        double gb2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < h; ++j) {
                double z = b1[j];
                for (std::size_t f = 0; f < d; ++f) z += W1[j][f] * X[i][f];
                a1[j] = sigmoid(z);
            }
            double z2 = b2;
            for (std::size_t j = 0; j < h; ++j) z2 += W2[j] * a1[j];
            const double delta2 = (sigmoid(z2) - static_cast<double>(y[i])) / static_cast<double>(n);
            gb2 += delta2;
            for (std::size_t j = 0; j < h; ++j) {
                gW2[j] += delta2 * a1[j];
                const double delta1 = delta2 * W2[j] * a1[j] * (1.0 - a1[j]);
                gb1[j] += delta1;
                for (std::size_t f = 0; f < d; ++f) gW1[j][f] += delta1 * X[i][f];
            }
        }
        const double lr = spec.learning_rate;
        for (std::size_t j = 0; j < h; ++j) {
            b1[j] -= lr * gb1[j];
            W2[j] -= lr * gW2[j];
            for (std::size_t f = 0; f < d; ++f) W1[j][f] -= lr * gW1[j][f];
        }
        b2 -= lr * gb2;
    }

    FittedClassifier clf;
    clf.spec = spec;
    clf.predict_proba = [W1, b1, W2, b2, h](const Matrix& Q) {
        std::vector<double> out(Q.size());
        for (std::size_t i = 0; i < Q.size(); ++i) {
            double z2 = b2;
            for (std::size_t j = 0; j < h; ++j) {
                double z = b1[j];
                for (std::size_t f = 0; f < Q[i].size(); ++f) z += W1[j][f] * Q[i][f];
                z2 += W2[j] * sigmoid(z);
            }
            out[i] = sigmoid(z2);
        }
        return out;
    };
    return clf;
}

}  // namespace

const char* family_name(Family f) {
    switch (f) {
        case Family::logreg: return "logreg";
        case Family::lda: return "lda";
        case Family::gnb: return "gnb";
        case Family::knn: return "knn";
        case Family::adaboost: return "adaboost";
        case Family::mlp: return "mlp";
    }
    return "?";
}

Family family_from_name(const std::string& name) {
    if (name == "logreg") return Family::logreg;
    if (name == "lda") return Family::lda;
    if (name == "gnb") return Family::gnb;
    if (name == "knn") return Family::knn;
    if (name == "adaboost") return Family::adaboost;
    if (name == "mlp") return Family::mlp;
    throw std::invalid_argument("unknown classifier family: " + name);
}

std::string ClassifierSpec::describe() const {
    char buf[128];
    switch (family) {
        case Family::logreg:
            std::snprintf(buf, sizeof buf, "C=%g penalty=%s", C, l1 ? "l1" : "l2");
            break;
        case Family::knn:
            std::snprintf(buf, sizeof buf, "k=%d weights=%s", k,
                          distance_weights ? "distance" : "uniform");
            break;
        case Family::lda:
            std::snprintf(buf, sizeof buf, "solver=%s", lsqr_solver ? "lsqr" : "svd");
            break;
        case Family::gnb:
            std::snprintf(buf, sizeof buf, "default");
            break;
        case Family::adaboost:
            std::snprintf(buf, sizeof buf, "n_estimators=%d learning_rate=%g", n_estimators,
                          learning_rate);
            break;
        case Family::mlp:
            std::snprintf(buf, sizeof buf, "hidden=%d lr=%g epochs=%d", hidden, learning_rate,
                          epochs);
            break;
    }
    return buf;
}

FittedClassifier fit(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y) {
    check_xy(X, y);
    switch (spec.family) {
        case Family::logreg: return fit_logreg(spec, X, y);
        case Family::lda: return fit_lda(spec, X, y);
        case Family::gnb: return fit_gnb(spec, X, y);
        case Family::knn: return fit_knn(spec, X, y);
        case Family::adaboost: return fit_adaboost(spec, X, y);
        case Family::mlp: return fit_mlp(spec, X, y);
    }
    throw std::logic_error("unreachable classifier family");
}

std::vector<ClassifierSpec> default_grid(Family f) {
    std::vector<ClassifierSpec> grid;
    switch (f) {
        case Family::logreg:
            for (double C : {0.01, 0.1, 1.0, 10.0})
                for (bool l1 : {true, false}) {
                    ClassifierSpec s;
                    s.family = f;
                    s.C = C;
                    s.l1 = l1;
                    grid.push_back(s);
                }
            break;
        case Family::knn:
            for (int k : {3, 5, 7, 9})
                for (bool dw : {false, true}) {
                    ClassifierSpec s;
                    s.family = f;
                    s.k = k;
                    s.distance_weights = dw;
                    grid.push_back(s);
                }
            break;
        case Family::lda:
            for (bool lsqr : {false, true}) {
                ClassifierSpec s;
                s.family = f;
                s.lsqr_solver = lsqr;
                grid.push_back(s);
            }
            break;
        case Family::gnb: {
            ClassifierSpec s;
            s.family = f;
            grid.push_back(s);
            break;
        }
        case Family::adaboost:
            for (int ne : {50, 100, 200})
                for (double lr : {0.01, 0.1, 1.0}) {
                    ClassifierSpec s;
                    s.family = f;
                    s.n_estimators = ne;
                    s.learning_rate = lr;
                    grid.push_back(s);
                }
            break;
        case Family::mlp: {
            ClassifierSpec s;
            s.family = f;
            grid.push_back(s);
            break;
        }
    }
    return grid;
}

GridSearchResult grid_search(
    Family f, const Matrix& X, const std::vector<int>& y,
    const std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>& inner_folds) {
    const auto grid = default_grid(f);
    if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
    if (inner_folds.empty()) throw std::invalid_argument("grid_search: no folds supplied");

    GridSearchResult res;
    res.best_mean_auc = -std::numeric_limits<double>::infinity();
    for (const auto& spec : grid) {
        double sum = 0.0;
        int used = 0;
        for (const auto& [tr, te] : inner_folds) {
            Matrix Xtr, Xte;
            std::vector<int> ytr, yte;
            for (std::size_t i : tr) {
                Xtr.push_back(X[i]);
                ytr.push_back(y[i]);
            }
            for (std::size_t i : te) {
                Xte.push_back(X[i]);
                yte.push_back(y[i]);
            }
            try {
                const FittedClassifier clf = fit(spec, Xtr, ytr);
                const auto probs = clf.predict_proba(Xte);
                sum += metrics::roc_and_auc(probs, yte).auc;
                ++used;
            } catch (const std::exception&) {
                // a fold whose split lacks a class (or degenerates a fit)
                // simply does not contribute to this spec's mean
            }
        }
        const double mean = used > 0 ? sum / used : -1.0;
        res.scored.emplace_back(spec, mean);
        if (mean > res.best_mean_auc) {  // strict: ties keep the earlier entry
            res.best_mean_auc = mean;
            res.best = spec;
        }
    }
    return res;
}

void flip_if_auc_below_half(FittedClassifier& clf, const Matrix& X, const std::vector<int>& y) {
    const auto probs = clf.predict_proba(X);
    const double auc = metrics::roc_and_auc(probs, y).auc;
    if (auc < 0.5) {
        auto inner = clf.predict_proba;
        clf.predict_proba = [inner](const Matrix& Q) {
            auto p = inner(Q);
            for (double& v : p) v = 1.0 - v;
            return p;
        };
        clf.flipped = true;
    }
}

}  // namespace qrisk::baselines
