#include "qrisk/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "qrisk/util/rng.hpp"

namespace qrisk::optim {

const char* status_name(OptStatus s) {
    switch (s) {
        case OptStatus::converged: return "converged";
        case OptStatus::budget_exhausted: return "budget_exhausted";
        case OptStatus::line_search_failed: return "line_search_failed";
        case OptStatus::diverged: return "diverged";
    }
    return "?";
}

const char* method_name(Method m) {
    switch (m) {
        case Method::cmaes: return "cmaes";
        case Method::spsa: return "spsa";
        case Method::cobyla: return "cobyla";
        case Method::bfgs: return "bfgs";
        case Method::slsqp: return "slsqp";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "cmaes") return Method::cmaes;
    if (name == "spsa") return Method::spsa;
    if (name == "cobyla") return Method::cobyla;
    if (name == "bfgs") return Method::bfgs;
    if (name == "slsqp") return Method::slsqp;
    throw std::invalid_argument("unknown optimizer: " + name);
}

namespace {

struct CountedObjective {
    const Objective& obj;
    long n_evals = 0;
    bool saw_nonfinite = false;

    double operator()(const Vec& x) {
        ++n_evals;
        const double v = obj.f(x);
        if (!std::isfinite(v)) saw_nonfinite = true;
        return v;
    }
};

// Central-difference gradient with per-coordinate step h * max(1, |x_i|).
Vec numeric_gradient(CountedObjective& f, const Vec& x, double h_rel) {
    Vec g(x.size(), 0.0);
    Vec xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = h_rel * std::max(1.0, std::fabs(x[i]));
        const double xi = x[i];
        xp[i] = xi + h;
        const double fp = f(xp);
        xp[i] = xi - h;
        const double fm = f(xp);
        xp[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

} // namespace

int cmaes_lambda(int dim) {
    return int(std::ceil(4.0 + 3.0 * std::log(double(dim))));
}

OptResult cmaes_minimize(const Objective& obj, const Vec& x0, const CmaesConfig& cfg) {
    const int m = obj.dim;
    if (int(x0.size()) != m) throw std::invalid_argument("cmaes: x0 dimension mismatch");
    if (cfg.budget < 1) throw std::invalid_argument("cmaes: budget < 1");
    if (cfg.sigma0 <= 0.0) throw std::invalid_argument("cmaes: sigma0 <= 0");

    CountedObjective f{obj};
    OptResult res;
    res.best_x = x0;
    res.best_f = f(x0);
    if (!std::isfinite(res.best_f)) {
        res.status = OptStatus::diverged;
        res.n_evals = f.n_evals;
        return res;
    }

    const int lambda = cmaes_lambda(m);
    const int mu = int(std::ceil(cfg.parent_fraction * lambda));
    Vec w(mu, 0.0);
    for (int i = 0; i < mu; ++i) w[i] = std::log(mu + 0.5) - std::log(double(i + 1));
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& v : w) v /= wsum;
    const double mu_eff = 1.0 / std::inner_product(w.begin(), w.end(), w.begin(), 0.0);

    const double c_sigma = (mu_eff + 2.0) / (m + mu_eff + 5.0);
    const double d_sigma =
        cfg.damping *
        (1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (m + 1.0)) - 1.0) + c_sigma);
    const double c_c = (4.0 + mu_eff / m) / (m + 4.0 + 2.0 * mu_eff / m);
    const double c_1 = 2.0 / ((m + 1.3) * (m + 1.3) + mu_eff);
    const double c_mu =
        std::min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((m + 2.0) * (m + 2.0) + mu_eff));
    const double chi_n = std::sqrt(double(m)) * (1.0 - 1.0 / (4.0 * m) + 1.0 / (21.0 * m * m));

    Vec mean = x0;
    double sigma = cfg.sigma0;
    Mat C = Mat::identity(m);
    Vec p_sigma(m, 0.0), p_c(m, 0.0);
    auto rng = make_rng(cfg.seed, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (int gen = 0; gen < cfg.budget; ++gen) {
        Vec eigval;
        Mat B;
        jacobi_eigen(C, eigval, B);
        for (auto& ev : eigval) ev = std::sqrt(std::max(ev, 1e-20));

        std::vector<Vec> zs(lambda, Vec(m)), xs(lambda, Vec(m));
        Vec fit(lambda, 0.0);
        for (int k = 0; k < lambda; ++k) {
            Vec z(m), y(m, 0.0);
            for (int i = 0; i < m; ++i) z[i] = gauss(rng);
            // y = B D z
            for (int i = 0; i < m; ++i) {
                double s = 0.0;
                for (int j = 0; j < m; ++j) s += B(i, j) * eigval[j] * z[j];
                y[i] = s;
            }
            for (int i = 0; i < m; ++i) xs[k][i] = mean[i] + sigma * y[i];
            zs[k] = y;
            fit[k] = f(xs[k]);
        }
        if (f.saw_nonfinite) {
            res.status = OptStatus::diverged;
            break;
        }

        std::vector<int> order(lambda);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return fit[a] < fit[b]; });
        if (fit[order[0]] < res.best_f) {
            res.best_f = fit[order[0]];
            res.best_x = xs[order[0]];
        }

        Vec y_w(m, 0.0);
        for (int r = 0; r < mu; ++r)
            for (int i = 0; i < m; ++i) y_w[i] += w[r] * zs[order[r]][i];
        for (int i = 0; i < m; ++i) mean[i] += cfg.c_mean * sigma * y_w[i];

        // C^{-1/2} y_w = B D^{-1} B^T y_w, for the sigma path.
        Vec bty(m, 0.0);
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int i = 0; i < m; ++i) s += B(i, j) * y_w[i];
            bty[j] = s / eigval[j];
        }
        Vec cinv_y(m, 0.0);
        for (int i = 0; i < m; ++i) {
            double s = 0.0;
            for (int j = 0; j < m; ++j) s += B(i, j) * bty[j];
            cinv_y[i] = s;
        }
        const double cs_f = std::sqrt(c_sigma * (2.0 - c_sigma) * mu_eff);
        for (int i = 0; i < m; ++i)
            p_sigma[i] = (1.0 - c_sigma) * p_sigma[i] + cs_f * cinv_y[i];

        const double ps_norm = norm2(p_sigma);
        const double hs_thresh =
            (1.4 + 2.0 / (m + 1.0)) * chi_n *
            std::sqrt(1.0 - std::pow(1.0 - c_sigma, 2.0 * (gen + 1)));
        const double h_sigma = ps_norm < hs_thresh ? 1.0 : 0.0;
        const double cc_f = std::sqrt(c_c * (2.0 - c_c) * mu_eff);
        for (int i = 0; i < m; ++i)
            p_c[i] = (1.0 - c_c) * p_c[i] + h_sigma * cc_f * y_w[i];

        const double delta_hs = (1.0 - h_sigma) * c_c * (2.0 - c_c);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                double rank_mu = 0.0;
                for (int r = 0; r < mu; ++r) rank_mu += w[r] * zs[order[r]][i] * zs[order[r]][j];
                C(i, j) = (1.0 - c_1 - c_mu) * C(i, j) +
                          c_1 * (p_c[i] * p_c[j] + delta_hs * C(i, j)) + c_mu * rank_mu;
            }
        }

        sigma *= std::exp((c_sigma / d_sigma) * (ps_norm / chi_n - 1.0));
        sigma = std::min(sigma, 1e6);
        res.trace.push_back(res.best_f);
    }

    res.n_evals = f.n_evals;
    if (res.status != OptStatus::diverged) res.status = OptStatus::budget_exhausted;
    return res;
}

OptResult spsa_minimize(const Objective& obj, const Vec& x0, const SpsaConfig& cfg) {
    const int m = obj.dim;
    if (int(x0.size()) != m) throw std::invalid_argument("spsa: x0 dimension mismatch");
    if (cfg.budget < 1) throw std::invalid_argument("spsa: budget < 1");

    CountedObjective f{obj};
    OptResult res;
    res.best_x = x0;
    double f_cur = f(x0);
    res.best_f = f_cur;
    if (!std::isfinite(f_cur)) {
        res.status = OptStatus::diverged;
        res.n_evals = f.n_evals;
        return res;
    }

    auto rng = make_rng(cfg.seed, 0);
    std::bernoulli_distribution coin(0.5);

    // Gain calibration from the objective scale at x0: probe the simultaneous
    // perturbation a few times and pick `a` so the first step has a modest,
    // dimension-independent magnitude.
    const double c0 = 0.2;
    const double A = 0.1 * cfg.budget;
    double g_mag = 0.0;
    const int probes = 5;
    Vec xp(m), xm(m);
    for (int t = 0; t < probes; ++t) {
        for (int i = 0; i < m; ++i) {
            const double d = coin(rng) ? 1.0 : -1.0;
            xp[i] = x0[i] + c0 * d;
            xm[i] = x0[i] - c0 * d;
        }
        g_mag += std::fabs(f(xp) - f(xm)) / (2.0 * c0);
    }
    g_mag /= probes;
    const double target_step = 0.1;
    const double a0 = g_mag > 1e-12 ? target_step * std::pow(1.0 + A, cfg.alpha) / g_mag
                                    : target_step;

    Vec x = x0;
    int since_improvement = 0;
    for (int k = 0; k < cfg.budget; ++k) {
        const double ak = a0 / std::pow(k + 1.0 + A, cfg.alpha);
        const double ck = c0 / std::pow(k + 1.0, cfg.gamma);
        Vec delta(m);
        for (int i = 0; i < m; ++i) delta[i] = coin(rng) ? 1.0 : -1.0;
        for (int i = 0; i < m; ++i) {
            xp[i] = x[i] + ck * delta[i];
            xm[i] = x[i] - ck * delta[i];
        }
        const double df = f(xp) - f(xm);
        Vec cand(m);
        for (int i = 0; i < m; ++i) cand[i] = x[i] - ak * (df / (2.0 * ck)) / delta[i];
        const double f_cand = f(cand);
        if (!std::isfinite(f_cand)) {
            res.status = OptStatus::diverged;
            break;
        }
        // Blocking: reject steps that worsen the objective beyond the allowance.
        if (f_cand <= f_cur + cfg.allowed_increase) {
            x = cand;
            f_cur = f_cand;
            if (f_cand < res.best_f - 1e-15) {
                res.best_f = f_cand;
                res.best_x = cand;
                since_improvement = 0;
            } else {
                ++since_improvement;
            }
        }
        res.trace.push_back(res.best_f);
        if (since_improvement >= cfg.patience) {
            res.status = OptStatus::converged;
            res.n_evals = f.n_evals;
            return res;
        }
    }
    res.n_evals = f.n_evals;
    if (res.status != OptStatus::diverged) res.status = OptStatus::budget_exhausted;
    return res;
}

OptResult cobyla_minimize(const Objective& obj, const Vec& x0, const CobylaConfig& cfg) {
    const int m = obj.dim;
    if (int(x0.size()) != m) throw std::invalid_argument("cobyla: x0 dimension mismatch");
    if (cfg.budget < 1) throw std::invalid_argument("cobyla: budget < 1");

    CountedObjective f{obj};
    OptResult res;

    // Simplex of m+1 points around the current best, spaced by the trust radius.
    std::vector<Vec> verts;
    Vec fv;
    auto rebuild = [&](const Vec& center, double rho, double center_value) {
        verts.assign(1, center);
        fv.assign(1, center_value);
        for (int i = 0; i < m; ++i) {
            Vec v = center;
            v[i] += rho;
            verts.push_back(v);
            fv.push_back(f(v));
        }
    };

    double rho = cfg.rho_begin;
    rebuild(x0, rho, f(x0));
    auto best_it = std::min_element(fv.begin(), fv.end());
    res.best_f = *best_it;
    res.best_x = verts[best_it - fv.begin()];
    if (f.saw_nonfinite) {
        res.status = OptStatus::diverged;
        res.n_evals = f.n_evals;
        return res;
    }

    for (int step = 0; step < cfg.budget; ++step) {
        int ib = 0, iw = 0;
        for (int i = 1; i <= m; ++i) {
            if (fv[i] < fv[ib]) ib = i;
            if (fv[i] > fv[iw]) iw = i;
        }

        // Linear interpolation model around the best vertex: D g = df.
        Mat D(m, m);
        Vec df(m, 0.0);
        int r = 0;
        for (int i = 0; i <= m; ++i) {
            if (i == ib) continue;
            for (int j = 0; j < m; ++j) D(r, j) = verts[i][j] - verts[ib][j];
            df[r] = fv[i] - fv[ib];
            ++r;
        }
        Vec g;
        bool degenerate = false;
        try {
            g = solve(D, df);
        } catch (const std::runtime_error&) {
            degenerate = true;
        }
        const double gn = degenerate ? 0.0 : norm2(g);

        bool improved = false;
        if (!degenerate && gn > 1e-14) {
            Vec cand = verts[ib];
            for (int i = 0; i < m; ++i) cand[i] -= rho * g[i] / gn;
            const double fc = f(cand);
            if (!std::isfinite(fc)) {
                res.status = OptStatus::diverged;
                break;
            }
            if (fc < fv[ib]) {
                verts[iw] = cand;
                fv[iw] = fc;
                improved = true;
            } else if (fc < fv[iw]) {
                verts[iw] = cand;
                fv[iw] = fc;
            }
        }

        if (!improved) {
            if (rho <= cfg.rho_end) {
                // Radius exhausted and the model step failed: done.
                int fb = 0;
                for (int i = 1; i <= m; ++i)
                    if (fv[i] < fv[fb]) fb = i;
                if (fv[fb] < res.best_f) {
                    res.best_f = fv[fb];
                    res.best_x = verts[fb];
                }
                res.trace.push_back(res.best_f);
                res.status = OptStatus::converged;
                res.n_evals = f.n_evals;
                return res;
            }
            rho = std::max(rho * 0.5, cfg.rho_end);
            int fb = 0;
            for (int i = 1; i <= m; ++i)
                if (fv[i] < fv[fb]) fb = i;
            rebuild(verts[fb], rho, fv[fb]);
            if (f.saw_nonfinite) {
                res.status = OptStatus::diverged;
                break;
            }
        }

        int fb = 0;
        for (int i = 1; i <= m; ++i)
            if (fv[i] < fv[fb]) fb = i;
        if (fv[fb] < res.best_f) {
            res.best_f = fv[fb];
            res.best_x = verts[fb];
        }
        res.trace.push_back(res.best_f);
    }
    res.n_evals = f.n_evals;
    if (res.status != OptStatus::diverged) res.status = OptStatus::budget_exhausted;
    return res;
}

namespace {

struct LineSearchResult {
    double alpha = 0.0;
    double f_new = 0.0;
    bool ok = false;
};

LineSearchResult armijo_backtrack(CountedObjective& f, const Vec& x, const Vec& d, double f0,
                                  double slope, double c1) {
    LineSearchResult ls;
    double alpha = 1.0;
    Vec xn(x.size());
    for (int t = 0; t < 40; ++t) {
        for (std::size_t i = 0; i < x.size(); ++i) xn[i] = x[i] + alpha * d[i];
        const double fn = f(xn);
        if (std::isfinite(fn) && fn <= f0 + c1 * alpha * slope) {
            ls.alpha = alpha;
            ls.f_new = fn;
            ls.ok = true;
            return ls;
        }
        alpha *= 0.5;
    }
    return ls;
}

template <typename StepFn>
OptResult quasi_newton_loop(const Objective& obj, const Vec& x0, const QuasiNewtonConfig& cfg,
                            StepFn make_direction) {
    const int m = obj.dim;
    if (int(x0.size()) != m) throw std::invalid_argument("quasi-newton: x0 dimension mismatch");
    if (cfg.budget < 1) throw std::invalid_argument("quasi-newton: budget < 1");

    CountedObjective f{obj};
    OptResult res;
    Vec x = x0;
    double fx = f(x);
    res.best_x = x;
    res.best_f = fx;
    if (!std::isfinite(fx)) {
        res.status = OptStatus::diverged;
        res.n_evals = f.n_evals;
        return res;
    }
    Vec g = numeric_gradient(f, x, cfg.grad_h);

    for (int it = 0; it < cfg.budget; ++it) {
        Vec d = make_direction(g);
        double slope = dot(g, d);
        if (slope >= 0.0) {  // not a descent direction; fall back to steepest descent
            for (int i = 0; i < m; ++i) d[i] = -g[i];
            slope = dot(g, d);
            if (slope >= 0.0) {
                res.trace.push_back(res.best_f);
                res.status = OptStatus::converged;
                break;
            }
        }
        const auto ls = armijo_backtrack(f, x, d, fx, slope, cfg.armijo_c1);
        if (!ls.ok) {
            res.trace.push_back(res.best_f);
            res.status = OptStatus::line_search_failed;
            break;
        }
        Vec x_new(m), s(m);
        for (int i = 0; i < m; ++i) {
            x_new[i] = x[i] + ls.alpha * d[i];
            s[i] = x_new[i] - x[i];
        }
        Vec g_new = numeric_gradient(f, x_new, cfg.grad_h);
        Vec y(m);
        for (int i = 0; i < m; ++i) y[i] = g_new[i] - g[i];

        const double df = fx - ls.f_new;
        x = x_new;
        fx = ls.f_new;
        g = g_new;
        if (fx < res.best_f) {
            res.best_f = fx;
            res.best_x = x;
        }
        res.trace.push_back(res.best_f);
        make_direction.update(s, y);
        if (df <= cfg.ftol * std::max(1.0, std::fabs(fx))) {
            res.status = OptStatus::converged;
            break;
        }
    }
    res.n_evals = f.n_evals;
    return res;
}

// Inverse-Hessian BFGS direction.
struct BfgsDirection {
    Mat H;
    explicit BfgsDirection(int m) : H(Mat::identity(m)) {}
    Vec operator()(const Vec& g) {
        Vec d = matvec(H, g);
        for (auto& v : d) v = -v;
        return d;
    }
    void update(const Vec& s, const Vec& y) {
        const double sy = dot(s, y);
        if (sy <= 1e-12) return;
        const std::size_t m = s.size();
        const double rho = 1.0 / sy;
        const Vec Hy = matvec(H, y);
        const double yHy = dot(y, Hy);
        // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                H(i, j) += -rho * (s[i] * Hy[j] + Hy[i] * s[j]) +
                           rho * (1.0 + rho * yHy) * s[i] * s[j];
    }
};

// Direct-Hessian quasi-Newton with Powell damping; the SQP step solves B d = -g.
struct DampedNewtonDirection {
    Mat B;
    explicit DampedNewtonDirection(int m) : B(Mat::identity(m)) {}
    Vec operator()(const Vec& g) {
        Vec rhs = g;
        for (auto& v : rhs) v = -v;
        try {
            return solve(B, rhs);
        } catch (const std::runtime_error&) {
            return rhs;
        }
    }
    void update(const Vec& s, const Vec& y) {
        const Vec Bs = matvec(B, s);
        const double sBs = dot(s, Bs);
        if (sBs <= 1e-14) return;
        double sy = dot(s, y);
        Vec ybar = y;
        if (sy < 0.2 * sBs) {
            const double phi = 0.8 * sBs / (sBs - sy);
            for (std::size_t i = 0; i < s.size(); ++i)
                ybar[i] = phi * y[i] + (1.0 - phi) * Bs[i];
            sy = dot(s, ybar);
        }
        if (sy <= 1e-14) return;
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = 0; j < s.size(); ++j)
                B(i, j) += -Bs[i] * Bs[j] / sBs + ybar[i] * ybar[j] / sy;
    }
};

} // namespace

OptResult bfgs_minimize(const Objective& obj, const Vec& x0, const QuasiNewtonConfig& cfg) {
    return quasi_newton_loop(obj, x0, cfg, BfgsDirection(obj.dim));
}

OptResult slsqp_minimize(const Objective& obj, const Vec& x0, const QuasiNewtonConfig& cfg) {
    return quasi_newton_loop(obj, x0, cfg, DampedNewtonDirection(obj.dim));
}

OptResult minimize(const Objective& obj, const Vec& x0, const MethodConfig& cfg) {
    switch (cfg.method) {
        case Method::cmaes: {
            CmaesConfig c;
            c.budget = cfg.budget;
            c.seed = cfg.seed;
            return cmaes_minimize(obj, x0, c);
        }
        case Method::spsa: {
            SpsaConfig c;
            c.budget = cfg.budget;
            c.seed = cfg.seed;
            return spsa_minimize(obj, x0, c);
        }
        case Method::cobyla: {
            CobylaConfig c;
            c.budget = cfg.budget;
            return cobyla_minimize(obj, x0, c);
        }
        case Method::bfgs: {
            QuasiNewtonConfig c;
            c.budget = cfg.budget;
            return bfgs_minimize(obj, x0, c);
        }
        case Method::slsqp: {
            QuasiNewtonConfig c;
            c.budget = cfg.budget;
            return slsqp_minimize(obj, x0, c);
        }
    }
    throw std::logic_error("minimize: unknown method");
}

} // namespace qrisk::optim
