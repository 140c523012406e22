#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "qrisk/optim.hpp"

using namespace qrisk;
using optim::Objective;
using optim::OptResult;

namespace {

Objective sphere(int m) {
    return {m, [](const Vec& x) {
                double s = 0.0;
                for (double v : x) s += v * v;
                return s;
            }};
}

Objective rosenbrock2() {
    return {2, [](const Vec& x) {
                const double a = 1.0 - x[0];
                const double b = x[1] - x[0] * x[0];
                return a * a + 100.0 * b * b;
            }};
}

// SPD quadratic (x-c)^T A (x-c) with A = [[2, 0.5], [0.5, 1]]
Objective quadratic2(double cx, double cy) {
    return {2, [cx, cy](const Vec& x) {
                const double u = x[0] - cx;
                const double v = x[1] - cy;
                return 2.0 * u * u + u * v + v * v;
            }};
}

const Vec kSphereStart = {0.8, -0.5, 0.3, -0.9};

bool running_min_non_increasing(const std::vector<double>& trace) {
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i] > trace[i - 1] + 1e-15) return false;
    return true;
}

}  // namespace

TEST_CASE("sphere accuracy targets per method at budget 75") {
    const auto obj = sphere(4);

    optim::QuasiNewtonConfig qn;
    CHECK(optim::bfgs_minimize(obj, kSphereStart, qn).best_f < 1e-8);
    CHECK(optim::slsqp_minimize(obj, kSphereStart, qn).best_f < 1e-8);

    optim::CmaesConfig cm;
    cm.seed = 11;
    CHECK(optim::cmaes_minimize(obj, kSphereStart, cm).best_f < 1e-3);

    optim::CobylaConfig co;
    CHECK(optim::cobyla_minimize(obj, kSphereStart, co).best_f < 1e-2);

    optim::SpsaConfig sp;
    sp.seed = 11;
    CHECK(optim::spsa_minimize(obj, kSphereStart, sp).best_f < 1e-1);
}

TEST_CASE("bfgs solves rosenbrock from the canonical start") {
    optim::QuasiNewtonConfig qn;
    qn.ftol = 1e-12;  // the banana valley is flat; default ftol stops ~1e-3 early
    const auto res = optim::bfgs_minimize(rosenbrock2(), {-1.2, 1.0}, qn);
    CHECK(std::abs(res.best_x[0] - 1.0) < 1e-3);
    CHECK(std::abs(res.best_x[1] - 1.0) < 1e-3);
}

TEST_CASE("cmaes population size formula uses the natural log") {
    CHECK(optim::cmaes_lambda(32) == 15);  // ceil(4 + 3*ln 32) = ceil(14.397)
    CHECK(optim::cmaes_lambda(16) == 13);  // ceil(4 + 3*ln 16) = ceil(12.318)
    CHECK(optim::cmaes_lambda(4) == 9);
    CHECK(optim::cmaes_lambda(1) >= 4);
}

TEST_CASE("quadratic minimizer recovery") {
    const double cx = 0.3, cy = -0.7;
    const auto obj = quadratic2(cx, cy);

    optim::CmaesConfig cm;
    cm.seed = 5;
    const auto cme = optim::cmaes_minimize(obj, {0.0, 0.0}, cm);
    CHECK(std::abs(cme.best_x[0] - cx) < 1e-2);
    CHECK(std::abs(cme.best_x[1] - cy) < 1e-2);

    optim::QuasiNewtonConfig qn;
    const auto sq = optim::slsqp_minimize(obj, {0.0, 0.0}, qn);
    CHECK(std::abs(sq.best_x[0] - cx) < 1e-4);
    CHECK(std::abs(sq.best_x[1] - cy) < 1e-4);

    const auto bf = optim::bfgs_minimize(obj, {0.0, 0.0}, qn);
    CHECK(std::abs(sq.best_f - bf.best_f) < 1e-6);
}

TEST_CASE("cobyla handles a non-smooth one-dimensional objective") {
    Objective absval{1, [](const Vec& x) { return std::abs(x[0]); }};
    optim::CobylaConfig co;
    const auto res = optim::cobyla_minimize(absval, {1.0}, co);
    CHECK(res.best_f < 0.05);
}

TEST_CASE("cobyla budget one takes exactly one model step") {
    optim::CobylaConfig co;
    co.budget = 1;
    const auto res = optim::cobyla_minimize(sphere(4), kSphereStart, co);
    CHECK(res.trace.size() == 1);
}

TEST_CASE("spsa terminates early on a constant objective") {
    Objective flat{3, [](const Vec&) { return 1.0; }};
    optim::SpsaConfig sp;
    sp.seed = 3;
    const auto res = optim::spsa_minimize(flat, {0.1, 0.2, 0.3}, sp);
    CHECK(res.status == optim::OptStatus::converged);
    CHECK(res.trace.size() <= 11);
    CHECK(res.best_f == 1.0);
}

TEST_CASE("bfgs ftol stop fires immediately on a constant objective") {
    Objective flat{2, [](const Vec&) { return 4.0; }};
    optim::QuasiNewtonConfig qn;
    const auto res = optim::bfgs_minimize(flat, {1.0, -1.0}, qn);
    CHECK(res.status == optim::OptStatus::converged);
    CHECK(res.trace.size() <= 2);
}

TEST_CASE("running minimum of every trace is non-increasing") {
    const auto obj = sphere(4);
    optim::QuasiNewtonConfig qn;
    optim::CmaesConfig cm;
    cm.seed = 9;
    optim::SpsaConfig sp;
    sp.seed = 9;
    optim::CobylaConfig co;
    CHECK(running_min_non_increasing(optim::bfgs_minimize(obj, kSphereStart, qn).trace));
    CHECK(running_min_non_increasing(optim::slsqp_minimize(obj, kSphereStart, qn).trace));
    CHECK(running_min_non_increasing(optim::cmaes_minimize(obj, kSphereStart, cm).trace));
    CHECK(running_min_non_increasing(optim::spsa_minimize(obj, kSphereStart, sp).trace));
    CHECK(running_min_non_increasing(optim::cobyla_minimize(obj, kSphereStart, co).trace));
}

TEST_CASE("evaluation counts respect the per-method bounds") {
    const auto obj = sphere(4);
    const int budget = 75;

    optim::CmaesConfig cm;
    cm.seed = 2;
    const auto cme = optim::cmaes_minimize(obj, kSphereStart, cm);
    CHECK(cme.n_evals <= long(optim::cmaes_lambda(4)) * budget + 1);
    CHECK(cme.trace.size() <= std::size_t(budget));

    optim::SpsaConfig sp;
    sp.seed = 2;
    const auto spr = optim::spsa_minimize(obj, kSphereStart, sp);
    // two gradient evals plus one blocking eval per step, plus calibration
    CHECK(spr.n_evals <= 3 * budget + 20);

    optim::QuasiNewtonConfig qn;
    const auto bf = optim::bfgs_minimize(obj, kSphereStart, qn);
    CHECK(bf.n_evals <= long(budget) * (2 * 4 + 40) + 2);

    optim::CobylaConfig co;
    const auto cob = optim::cobyla_minimize(obj, kSphereStart, co);
    // each step costs one candidate eval plus a simplex rebuild on shrink
    CHECK(cob.n_evals <= long(budget + 1) * (4 + 1));
}

TEST_CASE("translation equivariance on the quadratic") {
    const double sx = 1.5, sy = -2.0;
    const auto base = quadratic2(0.3, -0.7);
    const auto shifted = quadratic2(0.3 + sx, -0.7 + sy);

    optim::QuasiNewtonConfig qn;
    const auto b0 = optim::bfgs_minimize(base, {0.0, 0.0}, qn);
    const auto b1 = optim::bfgs_minimize(shifted, {sx, sy}, qn);
    CHECK(std::abs(b1.best_x[0] - b0.best_x[0] - sx) < 1e-3);
    CHECK(std::abs(b1.best_x[1] - b0.best_x[1] - sy) < 1e-3);

    const auto s0 = optim::slsqp_minimize(base, {0.0, 0.0}, qn);
    const auto s1 = optim::slsqp_minimize(shifted, {sx, sy}, qn);
    CHECK(std::abs(s1.best_x[0] - s0.best_x[0] - sx) < 1e-3);
    CHECK(std::abs(s1.best_x[1] - s0.best_x[1] - sy) < 1e-3);

    optim::CmaesConfig cm;
    cm.seed = 21;
    const auto c0 = optim::cmaes_minimize(base, {0.0, 0.0}, cm);
    const auto c1 = optim::cmaes_minimize(shifted, {sx, sy}, cm);
    CHECK(std::abs(c1.best_x[0] - c0.best_x[0] - sx) < 1e-3);
    CHECK(std::abs(c1.best_x[1] - c0.best_x[1] - sy) < 1e-3);
}

TEST_CASE("stochastic methods are seed-deterministic") {
    const auto obj = sphere(4);

    optim::CmaesConfig cm;
    cm.seed = 42;
    const auto a = optim::cmaes_minimize(obj, kSphereStart, cm);
    const auto b = optim::cmaes_minimize(obj, kSphereStart, cm);
    CHECK(a.best_f == b.best_f);
    CHECK(a.best_x == b.best_x);
    CHECK(a.trace == b.trace);
    CHECK(a.n_evals == b.n_evals);
    cm.seed = 43;
    const auto c = optim::cmaes_minimize(obj, kSphereStart, cm);
    CHECK(a.trace != c.trace);

    optim::SpsaConfig sp;
    sp.seed = 42;
    const auto d = optim::spsa_minimize(obj, kSphereStart, sp);
    const auto e = optim::spsa_minimize(obj, kSphereStart, sp);
    CHECK(d.best_f == e.best_f);
    CHECK(d.trace == e.trace);
}

TEST_CASE("non-finite objective reports divergence") {
    Objective bad{2, [](const Vec&) { return std::numeric_limits<double>::quiet_NaN(); }};
    optim::CmaesConfig cm;
    const auto res = optim::cmaes_minimize(bad, {0.0, 0.0}, cm);
    CHECK(res.status == optim::OptStatus::diverged);
}

TEST_CASE("input validation") {
    const auto obj = sphere(4);
    optim::CmaesConfig cm;
    CHECK_THROWS_AS(optim::cmaes_minimize(obj, {1.0, 2.0}, cm), std::invalid_argument);
    cm.budget = 0;
    CHECK_THROWS_AS(optim::cmaes_minimize(obj, kSphereStart, cm), std::invalid_argument);
    optim::QuasiNewtonConfig qn;
    CHECK_THROWS_AS(optim::bfgs_minimize(obj, {1.0}, qn), std::invalid_argument);
}

TEST_CASE("method name round trips and dispatcher consistency") {
    using optim::Method;
    for (auto m : {Method::cmaes, Method::spsa, Method::cobyla, Method::bfgs, Method::slsqp})
        CHECK(optim::method_from_name(optim::method_name(m)) == m);
    CHECK_THROWS_AS(optim::method_from_name("adam"), std::invalid_argument);

    const auto obj = sphere(4);
    optim::MethodConfig mc;
    mc.method = Method::cmaes;
    mc.budget = 30;
    mc.seed = 17;
    optim::CmaesConfig cm;
    cm.budget = 30;
    cm.seed = 17;
    const auto via_dispatch = optim::minimize(obj, kSphereStart, mc);
    const auto direct = optim::cmaes_minimize(obj, kSphereStart, cm);
    CHECK(via_dispatch.best_f == direct.best_f);
    CHECK(via_dispatch.trace == direct.trace);
}
