// Acceptance gate: ten numbered end-to-end checks over the whole library,
// one PASS/FAIL line each (plus indented detail), run as a single binary.
//
// Exit code 0 when every check passes outright or deviates only in the one
// documented way noted under check 3, whose reference value cannot be
// reproduced from inputs quoted at integer precision; any other failure
// exits 1. The FAIL line for a known divergence is still printed in full so
// the deviation stays visible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "qrisk/circuits.hpp"
#include "qrisk/cohort.hpp"
#include "qrisk/importance.hpp"
#include "qrisk/metrics.hpp"
#include "qrisk/optim.hpp"
#include "qrisk/qsim.hpp"
#include "qrisk/runner.hpp"
#include "qrisk/stats.hpp"
#include "qrisk/util/csv.hpp"
#include "qrisk/util/rng.hpp"
#include "qrisk/vqc.hpp"

using namespace qrisk;
namespace fs = std::filesystem;

namespace {

struct Checker {
    bool pass = true;
    bool known_divergence = false;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            notes.push_back("FAILED: " + what);
        }
    }
    void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int g_passed = 0, g_known = 0, g_failed = 0;

void run_check(int num, const char* label, const std::function<void(Checker&)>& body) {
    Checker ck;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(ck);
    } catch (const std::exception& e) {
        ck.pass = false;
        ck.notes.push_back(std::string("FAILED: unexpected exception: ") + e.what());
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool known = !ck.pass && ck.known_divergence;
    std::printf("[%s] %2d. %-32s (%.2f s)%s\n", ck.pass ? "PASS" : "FAIL", num, label, dt,
                known ? "  [known divergence]" : "");
    for (const auto& n : ck.notes) std::printf("          %s\n", n.c_str());
    if (ck.pass)
        ++g_passed;
    else if (known)
        ++g_known;
    else
        ++g_failed;
}

// ---------------------------------------------------------------------------
// 1. circuit shapes
// ---------------------------------------------------------------------------
void check_circuits(Checker& ck) {
    circuits::FeatureMapSpec fms;
    fms.n_features = 4;
    fms.reps = 1;
    const auto fm = circuits::build_feature_map(fms);
    ck.require(qsim::circuit_depth(fm) == 17, "feature map (4,1) depth == 17");
    ck.require(fm.gates.size() == 26, "feature map (4,1) gate count == 26");
    auto census = qsim::gate_census(fm);
    ck.require(census[qsim::GateKind::CNOT] == 12, "feature map census: 12 CNOT");
    ck.require(census[qsim::GateKind::P] == 10, "feature map census: 10 P");
    ck.require(census[qsim::GateKind::H] == 4, "feature map census: 4 H");

    circuits::AnsatzSpec ra;
    ra.family = circuits::AnsatzFamily::real_amplitudes;
    ra.n_qubits = 4;
    ra.reps = 3;
    const auto rac = circuits::build_ansatz(ra);
    ck.require(qsim::circuit_depth(rac) == 11, "real-amplitudes (4,3) depth == 11");
    ck.require(rac.gates.size() == 25, "real-amplitudes (4,3) gate count == 25");
    ck.require(ra.n_parameters() == 16, "real-amplitudes (4,3) parameters == 16");
    ck.require(rac.n_theta_slots() == 16, "real-amplitudes circuit theta slots == 16");

    circuits::AnsatzSpec su;
    su.family = circuits::AnsatzFamily::efficient_su2;
    su.n_qubits = 4;
    su.reps = 3;
    const auto suc = circuits::build_ansatz(su);
    ck.require(qsim::circuit_depth(suc) == 15, "efficient-su2 (4,3) depth == 15");
    ck.require(suc.gates.size() == 41, "efficient-su2 (4,3) gate count == 41");
    ck.require(su.n_parameters() == 32, "efficient-su2 (4,3) parameters == 32");
    ck.require(suc.n_theta_slots() == 32, "efficient-su2 circuit theta slots == 32");

    const auto comp_ra = qsim::compose(fm, rac);
    ck.require(qsim::circuit_depth(comp_ra) == 28, "feature map + real-amplitudes depth == 28");
    ck.require(comp_ra.gates.size() == 51, "feature map + real-amplitudes gate count == 51");
    const auto comp_su = qsim::compose(fm, suc);
    ck.require(qsim::circuit_depth(comp_su) == 32, "feature map + efficient-su2 depth == 32");
    ck.require(comp_su.gates.size() == 67, "feature map + efficient-su2 gate count == 67");
    ck.note("all shape counts exact (zero tolerance)");
}

// ---------------------------------------------------------------------------
// 2. cohort 2x2 statistics
// ---------------------------------------------------------------------------
void check_cohort_stats(Checker& ck) {
    const auto c = cohort::generate_synthetic(cohort::CohortSpec::published(), 1);
    struct Target {
        const char* name;
        int exposed;
        double rr, lo, hi, p;
        bool check_ci;
    };
    const std::vector<Target> targets = {
        {"NOCOIL", 0, 3.16, 0.99, 10.05, 0.032, true},
        {"ICG", 0, 2.11, 0.0, 0.0, 0.042, false},
        {"DM", 1, 2.16, 1.06, 4.37, 0.036, true},
        {"SMOKING", 1, 2.31, 1.15, 4.67, 0.042, true},
        {"ACSP", 0, 2.21, 0.0, 0.0, 0.074, false},
    };
    for (const auto& t : targets) {
        const auto tab = cohort::crosstab(c, t.name, t.exposed);
        const auto rr = stats::relative_risk(tab);
        const auto chi = stats::chi2_test(tab, stats::Correction::automatic);
        ck.require(std::abs(rr.rr - t.rr) <= 0.01,
                   std::string(t.name) + " RR " + fmt("%.4f", rr.rr) + " vs " + fmt("%.2f", t.rr) +
                       " +/- 0.01");
        if (t.check_ci) {
            ck.require(std::abs(rr.ci_low - t.lo) <= 0.01,
                       std::string(t.name) + " CI low " + fmt("%.4f", rr.ci_low) + " vs " +
                           fmt("%.2f", t.lo) + " +/- 0.01");
            ck.require(std::abs(rr.ci_high - t.hi) <= 0.01,
                       std::string(t.name) + " CI high " + fmt("%.4f", rr.ci_high) + " vs " +
                           fmt("%.2f", t.hi) + " +/- 0.01");
        }
        ck.require(std::abs(chi.p_value - t.p) <= 0.005,
                   std::string(t.name) + " p " + fmt("%.4f", chi.p_value) + " vs " +
                       fmt("%.3f", t.p) + " +/- 0.005");
        ck.note(std::string(t.name) + ": RR " + fmt("%.2f", rr.rr) + " CI (" +
                fmt("%.2f", rr.ci_low) + ", " + fmt("%.2f", rr.ci_high) + ") p " +
                fmt("%.4f", chi.p_value) + (chi.corrected ? " (Yates)" : ""));
    }
}

// ---------------------------------------------------------------------------
// 3. likelihood-ratio arithmetic
// ---------------------------------------------------------------------------
void check_lrt(Checker& ck) {
    // Log-likelihoods quoted at integer precision: full -67 (16 parameters),
    // AIC-reduced -70 (5), BIC-reduced -73 (4), intercept-only -81 (1).
    const auto s2_null = stats::likelihood_ratio_test(-70.0, 5, -81.0, 1);
    ck.require(s2_null.df == 4 && std::abs(s2_null.deviance - 22.0) < 1e-9,
               "AIC model vs null: deviance 22, df 4");
    ck.require(s2_null.p_value < 0.001,
               "AIC model vs null: p " + fmt("%.6f", s2_null.p_value) + " < 0.001");
    ck.note("AIC model vs null: deviance 22 df 4 p " + fmt("%.6f", s2_null.p_value) +
            " (reference < 0.001)");

    const auto s3_null = stats::likelihood_ratio_test(-73.0, 4, -81.0, 1);
    ck.require(s3_null.df == 3 && std::abs(s3_null.deviance - 16.0) < 1e-9,
               "BIC model vs null: deviance 16, df 3");
    ck.require(std::abs(s3_null.p_value - 0.001) <= 0.02,
               "BIC model vs null: p " + fmt("%.6f", s3_null.p_value) + " within 0.001 +/- 0.02");
    ck.note("BIC model vs null: deviance 16 df 3 p " + fmt("%.6f", s3_null.p_value) +
            " (reference ~0.001)");

    const auto s1_s2 = stats::likelihood_ratio_test(-67.0, 16, -70.0, 5);
    ck.require(s1_s2.df == 11 && std::abs(s1_s2.deviance - 6.0) < 1e-9,
               "full vs AIC model: deviance 6, df 11");
    ck.require(std::abs(s1_s2.p_value - 0.879) <= 0.02,
               "full vs AIC model: p " + fmt("%.6f", s1_s2.p_value) + " within 0.879 +/- 0.02");
    ck.note("full vs AIC model: deviance 6 df 11 p " + fmt("%.6f", s1_s2.p_value) +
            " (reference ~0.879)");

    const auto s1_s3 = stats::likelihood_ratio_test(-67.0, 16, -73.0, 4);
    ck.require(s1_s3.df == 12 && std::abs(s1_s3.deviance - 12.0) < 1e-9,
               "full vs BIC model: deviance 12, df 12");
    if (std::abs(s1_s3.p_value - 0.551) <= 0.02) {
        ck.note("full vs BIC model: p " + fmt("%.6f", s1_s3.p_value) + " (reference ~0.551)");
    } else if (std::abs(s1_s3.p_value - 0.4457) <= 1e-3) {
        ck.pass = false;
        ck.known_divergence = true;
        ck.note("FAILED: full vs BIC model: p " + fmt("%.6f", s1_s3.p_value) +
                " vs reference 0.551 +/- 0.02");
        ck.note("the inputs are quoted at integer precision, so the deviance can only be an");
        ck.note("even integer: deviance 12 -> p 0.4457 and deviance 10 -> p 0.6160 bracket the");
        ck.note("reference, which would need deviance ~10.75 (unrounded log-likelihoods);");
        ck.note("0.551 is unreachable from the quoted inputs, so this deviation is expected");
    } else {
        ck.require(false, "full vs BIC model: p " + fmt("%.6f", s1_s3.p_value) +
                              " matches neither 0.551 +/- 0.02 nor the documented 0.4457");
    }
}

// ---------------------------------------------------------------------------
// 4. depolarizing channel
// ---------------------------------------------------------------------------
void check_noise(Checker& ck) {
    qsim::NoiseModel nm;
    nm.p_gate = 0.05;

    // completeness: sum K^dagger K == I
    const auto K = nm.kraus_operators();
    std::complex<double> s[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (const auto& k : K)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int m = 0; m < 2; ++m) s[i][j] += std::conj(k[m * 2 + i]) * k[m * 2 + j];
    double worst = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            worst = std::max(worst, std::abs(s[i][j] - (i == j ? 1.0 : 0.0)));
    ck.require(worst <= 1e-12, "Kraus completeness: max |sum K+K - I| = " + fmt("%.2e", worst));
    ck.note("Kraus completeness residual " + fmt("%.2e", worst));

    // fixed point: I/2 is untouched
    auto mixed = qsim::QuantumState::zero_mixed(1);
    mixed.rho = {0.5, 0.0, 0.0, 0.5};
    qsim::apply_depolarizing(mixed, 0, nm.p_gate);
    double fp = 0.0;
    fp = std::max(fp, std::abs(mixed.rho[0] - 0.5));
    fp = std::max(fp, std::abs(mixed.rho[1]));
    fp = std::max(fp, std::abs(mixed.rho[2]));
    fp = std::max(fp, std::abs(mixed.rho[3] - 0.5));
    ck.require(fp <= 1e-12, "I/2 fixed point residual " + fmt("%.2e", fp));

    // |0><0| at p = 0.05 -> diag(29/30, 1/30) = (0.96667, 0.03333)
    auto zero = qsim::QuantumState::zero_mixed(1);
    qsim::apply_depolarizing(zero, 0, nm.p_gate);
    const double d0 = zero.rho[0].real(), d1 = zero.rho[3].real();
    ck.require(std::abs(d0 - 29.0 / 30.0) <= 1e-9,
               "diag[0] " + fmt("%.10f", d0) + " vs 29/30 to 1e-9");
    ck.require(std::abs(d1 - 1.0 / 30.0) <= 1e-9,
               "diag[1] " + fmt("%.10f", d1) + " vs 1/30 to 1e-9");
    ck.note("|0><0| at p=0.05 -> diag(" + fmt("%.5f", d0) + ", " + fmt("%.5f", d1) + ")");

    // trace stays 1 after every gate of a full pipeline circuit
    circuits::FeatureMapSpec fms;
    const auto fm = circuits::build_feature_map(fms);
    circuits::AnsatzSpec as;
    const auto an = circuits::build_ansatz(as);
    auto rng = make_rng(404, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uth(-std::numbers::pi, std::numbers::pi);
    std::vector<double> x(4), theta(as.n_parameters());
    for (double& v : x) v = gauss(rng);
    for (double& v : theta) v = uth(rng);
    const auto bound = qsim::compose(fm, an).bind(&x, &theta);

    auto st = qsim::QuantumState::zero_mixed(bound.n_qubits);
    const std::size_t dim = st.dim();
    double worst_trace = 0.0;
    for (const auto& g : bound.gates) {
        qsim::apply_gate(st, g);
        if (qsim::is_single_qubit(g.kind)) qsim::apply_depolarizing(st, g.target, nm.p_gate);
        double tr = 0.0;
        for (std::size_t i = 0; i < dim; ++i) tr += st.rho[i * dim + i].real();
        worst_trace = std::max(worst_trace, std::abs(tr - 1.0));
    }
    ck.require(worst_trace <= 1e-9,
               "density-matrix trace drift across the pipeline: " + fmt("%.2e", worst_trace));
    ck.note("worst |trace - 1| over " + std::to_string(bound.gates.size()) +
            " pipeline steps: " + fmt("%.2e", worst_trace));

    const auto probs = qsim::run_exact(bound, nm);
    double psum = 0.0;
    for (double p : probs) psum += p;
    ck.require(std::abs(psum - 1.0) <= 1e-9, "exact-mode outcome probabilities sum to 1");
}

// ---------------------------------------------------------------------------
// 5. shot/exact agreement
// ---------------------------------------------------------------------------
void check_modes(Checker& ck) {
    const std::uint64_t n_shots = 65536;
    qsim::NoiseModel nm;
    nm.p_gate = 0.05;
    double worst_z = 0.0;
    for (int i = 0; i < 20; ++i) {
        auto rng = make_rng(505, static_cast<std::uint64_t>(i));
        circuits::FeatureMapSpec fms;
        fms.n_features = 2 + i % 3;
        circuits::AnsatzSpec as;
        as.family = (i % 2 == 0) ? circuits::AnsatzFamily::efficient_su2
                                 : circuits::AnsatzFamily::real_amplitudes;
        as.n_qubits = fms.n_features;
        as.reps = 1 + i % 3;
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> uth(-std::numbers::pi, std::numbers::pi);
        std::vector<double> x(fms.n_features), theta(as.n_parameters());
        for (double& v : x) v = gauss(rng);
        for (double& v : theta) v = uth(rng);
        const auto bound =
            qsim::compose(circuits::build_feature_map(fms), circuits::build_ansatz(as))
                .bind(&x, &theta);

        const auto exact = qsim::run_exact(bound, nm);
        const auto shots =
            qsim::run_shots(bound, nm, n_shots, derive_seed(909, static_cast<std::uint64_t>(i)));
        for (std::size_t k = 0; k < exact.size(); ++k) {
            const auto bits = qsim::to_bitstring(k, bound.n_qubits);
            const auto it = shots.counts.find(bits);
            const double freq =
                it == shots.counts.end() ? 0.0 : double(it->second) / double(n_shots);
            const double sigma = std::sqrt(exact[k] * (1.0 - exact[k]) / double(n_shots));
            ck.require(std::abs(freq - exact[k]) <= 4.0 * sigma,
                       "circuit " + std::to_string(i) + " outcome " + bits + ": |" +
                           fmt("%.5f", freq) + " - " + fmt("%.5f", exact[k]) + "| <= 4 sigma");
            if (sigma > 0.0) worst_z = std::max(worst_z, std::abs(freq - exact[k]) / sigma);
        }
    }
    ck.note("20 random bound circuits at 65536 shots; worst |z| = " + fmt("%.2f", worst_z) +
            " (bound 4)");
}

// ---------------------------------------------------------------------------
// 6. optimizer accuracy
// ---------------------------------------------------------------------------
void check_optim(Checker& ck) {
    const optim::Objective sphere{4, [](const Vec& v) {
                                      double s = 0.0;
                                      for (double u : v) s += u * u;
                                      return s;
                                  }};
    const Vec start = {0.8, -0.5, 0.3, -0.9};

    optim::QuasiNewtonConfig qn;
    const double f_bfgs = optim::bfgs_minimize(sphere, start, qn).best_f;
    ck.require(f_bfgs < 1e-8, "BFGS sphere " + fmt("%.2e", f_bfgs) + " < 1e-8");
    const double f_slsqp = optim::slsqp_minimize(sphere, start, qn).best_f;
    ck.require(f_slsqp < 1e-8, "SLSQP sphere " + fmt("%.2e", f_slsqp) + " < 1e-8");
    optim::CmaesConfig cm;
    cm.seed = 11;
    const double f_cma = optim::cmaes_minimize(sphere, start, cm).best_f;
    ck.require(f_cma < 1e-3, "CMA-ES sphere " + fmt("%.2e", f_cma) + " < 1e-3");
    optim::CobylaConfig co;
    const double f_cob = optim::cobyla_minimize(sphere, start, co).best_f;
    ck.require(f_cob < 1e-2, "COBYLA sphere " + fmt("%.2e", f_cob) + " < 1e-2");
    optim::SpsaConfig sp;
    sp.seed = 11;
    const double f_spsa = optim::spsa_minimize(sphere, start, sp).best_f;
    ck.require(f_spsa < 1e-1, "SPSA sphere " + fmt("%.2e", f_spsa) + " < 1e-1");
    ck.note("sphere(4) best values: bfgs " + fmt("%.1e", f_bfgs) + ", slsqp " +
            fmt("%.1e", f_slsqp) + ", cmaes " + fmt("%.1e", f_cma) + ", cobyla " +
            fmt("%.1e", f_cob) + ", spsa " + fmt("%.1e", f_spsa));

    const optim::Objective rosen{2, [](const Vec& v) {
                                     const double a = 1.0 - v[0];
                                     const double b = v[1] - v[0] * v[0];
                                     return a * a + 100.0 * b * b;
                                 }};
    optim::QuasiNewtonConfig qn2;
    qn2.ftol = 1e-12;  // the banana valley is flat; the default ftol stops ~1e-3 early
    const auto rb = optim::bfgs_minimize(rosen, {-1.2, 1.0}, qn2);
    ck.require(std::abs(rb.best_x[0] - 1.0) < 1e-3 && std::abs(rb.best_x[1] - 1.0) < 1e-3,
               "BFGS Rosenbrock lands within 1e-3 of (1,1)");
    ck.note("Rosenbrock solution (" + fmt("%.6f", rb.best_x[0]) + ", " + fmt("%.6f", rb.best_x[1]) +
            ")");
}

// ---------------------------------------------------------------------------
// 7. qnn training at desk scale
// ---------------------------------------------------------------------------
void check_training(Checker& ck) {
    const auto c = cohort::generate_synthetic(cohort::CohortSpec::published(), 1);
    const auto fm = cohort::build_features(c, {"NOCOIL", "ACSP", "DM", "SMOKING"});
    const auto st = cohort::Standardizer::fit(fm.X);
    const auto X = st.transform(fm.X);

    const std::vector<optim::Method> methods = {optim::Method::bfgs, optim::Method::cobyla,
                                                optim::Method::slsqp, optim::Method::cmaes,
                                                optim::Method::spsa};
    const int n_runs = 10;
    std::vector<std::vector<double>> finals(methods.size()), initials(methods.size());
    const auto t0 = std::chrono::steady_clock::now();
    for (int run = 0; run < n_runs; ++run) {
        const std::uint64_t run_seed = derive_seed(1, static_cast<std::uint64_t>(run));
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            vqc::VqcModel m;
            m.feature_map.n_features = 4;
            m.ansatz.family = circuits::AnsatzFamily::efficient_su2;
            m.ansatz.n_qubits = 4;
            m.ansatz.reps = 3;
            m.noise.p_gate = 0.05;
            m.mode = vqc::EvalMode::exact;
            optim::MethodConfig mc;
            mc.method = methods[mi];
            mc.budget = 75;
            mc.seed = run_seed;
            const auto rec = vqc::train(m, X, fm.y, mc, run_seed);
            finals[mi].push_back(rec.best_loss);
            initials[mi].push_back(rec.initial_loss);
            // all methods share the run seed, hence the same starting point
            ck.require(rec.initial_loss == initials[0][run],
                       "run " + std::to_string(run) + ": initial loss shared across methods");
        }
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double u : v) s += u;
        return s / double(v.size());
    };
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        const double mf = mean(finals[mi]), mi0 = mean(initials[mi]);
        ck.require(mf < mi0, std::string(optim::method_name(methods[mi])) +
                                 " mean final < mean initial (" + fmt("%.4f", mf) + " vs " +
                                 fmt("%.4f", mi0) + ")");
        ck.note(std::string(optim::method_name(methods[mi])) + ": mean initial " +
                fmt("%.4f", mi0) + " -> mean final " + fmt("%.4f", mf));
    }
    const double bfgs_mean = mean(finals[0]);
    ck.require(bfgs_mean >= 0.45 && bfgs_mean <= 0.70,
               "efficient-su2 + BFGS mean final BCE " + fmt("%.4f", bfgs_mean) +
                   " within [0.45, 0.70]");
    int wins = 0;
    for (int run = 0; run < n_runs; ++run)
        if (finals[0][run] <= finals[1][run]) ++wins;
    ck.require(wins >= 8, "BFGS <= COBYLA in " + std::to_string(wins) + "/10 paired seeds (>= 8)");
    ck.note("BFGS <= COBYLA in " + std::to_string(wins) + "/10 paired-seed comparisons");
    // budget: 30 min on 8 cores; this binary runs single-threaded work items,
    // so allow the single-core equivalent
    ck.require(wall < 14400.0, "wall time under the single-core equivalent budget");
    ck.note("50 training runs in " + fmt("%.1f", wall) + " s on this machine");
}

// ---------------------------------------------------------------------------
// 8. metric oracles
// ---------------------------------------------------------------------------
void check_metrics(Checker& ck) {
    auto rng = make_rng(808, 0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double worst_auc = 0.0, worst_comp = 0.0;
    for (int i = 0; i < 50; ++i) {
        const std::size_t n = 12 + (static_cast<std::size_t>(i) * 7) % 100;
        std::vector<double> probs(n);
        std::vector<int> labels(n);
        const bool quantize = i % 2 == 1;  // half the datasets carry ties
        for (std::size_t j = 0; j < n; ++j) {
            double p = uni(rng);
            if (quantize) p = std::round(p * 10.0) / 10.0;
            probs[j] = p;
            labels[j] = uni(rng) < 0.35 ? 1 : 0;
        }
        labels[0] = 1;  // both classes present
        labels[1] = 0;

        // pairwise Mann-Whitney oracle, ties at half weight
        double u = 0.0;
        std::size_t n1 = 0, n0 = 0;
        for (std::size_t a = 0; a < n; ++a) {
            if (labels[a] != 1) continue;
            ++n1;
            for (std::size_t b = 0; b < n; ++b) {
                if (labels[b] != 0) continue;
                if (probs[a] > probs[b])
                    u += 1.0;
                else if (probs[a] == probs[b])
                    u += 0.5;
            }
        }
        n0 = n - n1;
        const double auc_ref = u / (double(n1) * double(n0));
        const double auc = metrics::roc_and_auc(probs, labels).auc;
        worst_auc = std::max(worst_auc, std::abs(auc - auc_ref));

        std::vector<double> comp(n);
        for (std::size_t j = 0; j < n; ++j) comp[j] = 1.0 - probs[j];
        const double auc_c = metrics::roc_and_auc(comp, labels).auc;
        worst_comp = std::max(worst_comp, std::abs(auc_c - (1.0 - auc)));

        // fixed-sensitivity thresholds honour the floor whenever positives exist
        metrics::ThresholdRule rule;
        rule.kind = metrics::ThresholdRule::Kind::fixed_sensitivity;
        rule.sensitivity = 0.83;
        const double thr = metrics::select_threshold(probs, labels, rule);
        const auto cmx = metrics::confusion_metrics(probs, labels, thr);
        ck.require(cmx.sensitivity.has_value() && *cmx.sensitivity >= 0.83,
                   "dataset " + std::to_string(i) + ": sensitivity at selected threshold >= 0.83");

        // Count R-squared is accuracy, bit for bit, at any threshold
        for (const double t : {0.25, 0.5, 0.75, thr}) {
            const auto pr2 = metrics::pseudo_r2(probs, labels, t);
            const auto cm2 = metrics::confusion_metrics(probs, labels, t);
            ck.require(pr2.count == cm2.accuracy,
                       "dataset " + std::to_string(i) + ": count R2 == accuracy at t=" +
                           fmt("%.2f", t));
        }
    }
    ck.require(worst_auc <= 1e-12,
               "AUC == pairwise U/(n1*n0): worst |diff| = " + fmt("%.2e", worst_auc));
    ck.require(worst_comp <= 1e-12,
               "AUC(1-p) == 1 - AUC(p): worst |diff| = " + fmt("%.2e", worst_comp));
    ck.note("50 random datasets: worst AUC-vs-U gap " + fmt("%.2e", worst_auc) +
            ", worst complement gap " + fmt("%.2e", worst_comp));

    // analytic spot values: the coin-flip predictor
    std::vector<double> half(40, 0.5);
    std::vector<int> mixed(40);
    for (std::size_t j = 0; j < mixed.size(); ++j) mixed[j] = int(j % 2);
    const auto cal = metrics::calibration_losses(half, mixed);
    ck.require(cal.brier == 0.25, "Brier of the coin-flip predictor == 0.25 exactly");
    ck.require(std::abs(cal.log_loss - std::numbers::ln2) <= 1e-15,
               "log-loss of the coin-flip predictor == ln 2 to double precision");
    ck.note("coin-flip spot values: Brier " + fmt("%.6f", cal.brier) + ", log-loss " +
            fmt("%.16f", cal.log_loss));
}

// ---------------------------------------------------------------------------
// 9. importance properties
// ---------------------------------------------------------------------------
void check_importance(Checker& ck) {
    const auto logistic = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const auto linear_sigmoid = [&](Vec w, double b) -> importance::PredictFn {
        return [w = std::move(w), b, logistic](const importance::Matrix& Q) {
            std::vector<double> out(Q.size());
            for (std::size_t i = 0; i < Q.size(); ++i) {
                double z = b;
                for (std::size_t j = 0; j < Q[i].size(); ++j) z += w[j] * Q[i][j];
                out[i] = logistic(z);
            }
            return out;
        };
    };

    auto rng = make_rng(2, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    importance::Matrix X(80, Vec(4));
    for (auto& row : X)
        for (double& v : row) v = gauss(rng);
    std::vector<int> y(80);
    for (std::size_t i = 0; i < 80; ++i) y[i] = X[i][0] > 0.0 ? 1 : 0;

    const Vec w = {4.0, 0.1, 0.1, 0.1};
    const auto predict = linear_sigmoid(w, 0.0);

    const auto perm = importance::permutation_importance(predict, X, y, 50, 11);
    double psum = 0.0;
    for (double v : perm.normalized) psum += v;
    ck.require(std::abs(psum - 1.0) <= 1e-12, "permutation normalized scores sum to 1");
    ck.require(perm.normalized[0] >= 0.9, "informative feature takes " +
                                              fmt("%.3f", perm.normalized[0]) +
                                              " of the permutation profile (>= 0.9)");
    ck.note("permutation profile: " + fmt("%.3f", perm.normalized[0]) + " / " +
            fmt("%.3f", perm.normalized[1]) + " / " + fmt("%.3f", perm.normalized[2]) + " / " +
            fmt("%.3f", perm.normalized[3]));

    const auto grad = importance::gradient_importance(predict, X, 1e-3);
    double gsum = 0.0;
    for (double v : grad.normalized) gsum += v;
    ck.require(std::abs(gsum - 1.0) <= 1e-12, "gradient normalized scores sum to 1");

    // analytic derivative of the sigmoid-linear surrogate:
    // d p / d x_j = w_j p (1 - p), averaged over rows
    const auto base = predict(X);
    double mean_pq = 0.0;
    for (double p : base) mean_pq += p * (1.0 - p);
    mean_pq /= double(base.size());
    double worst_rel = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double analytic = std::abs(w[j]) * mean_pq;
        const double rel = std::abs(grad.scaled[j] - analytic) / analytic;
        worst_rel = std::max(worst_rel, rel);
    }
    ck.require(worst_rel <= 0.05, "gradient scores within 5% of analytic derivatives (worst " +
                                      fmt("%.4f", worst_rel) + ") at epsilon 1e-3");
    ck.note("worst relative gap to the analytic derivative: " + fmt("%.4f", worst_rel));
}

// ---------------------------------------------------------------------------
// 10. end-to-end determinism
// ---------------------------------------------------------------------------
void check_determinism(Checker& ck) {
    runner::RunConfig cfg;
    cfg.data_csv.clear();  // synthetic cohort
    cfg.cohort_seed = 1;
    cfg.seed = 21;
    cfg.ansatz = "real_amplitudes";
    cfg.ansatz_reps = 1;
    cfg.optimizers = {"cobyla"};
    cfg.budget = 10;
    cfg.baselines = {"gnb", "logreg"};
    cfg.outer_folds = 3;
    cfg.inner_folds = 2;
    cfg.importance_repeats = 20;
    const fs::path out = fs::temp_directory_path() / "qrisk_acceptance_compare";
    const fs::path first = fs::temp_directory_path() / "qrisk_acceptance_compare_first";
    cfg.out_dir = out.string();
    fs::remove_all(out);
    fs::remove_all(first);

    ck.require(runner::cmd_compare(cfg) == 0, "first compare invocation exits 0");
    fs::rename(out, first);
    ck.require(runner::cmd_compare(cfg) == 0, "second compare invocation exits 0");
    if (!ck.pass) return;

    const auto collect = [](const fs::path& root) {
        std::vector<std::string> rel;
        for (const auto& e : fs::recursive_directory_iterator(root))
            if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), root).generic_string());
        std::sort(rel.begin(), rel.end());
        return rel;
    };
    const auto files_a = collect(first);
    const auto files_b = collect(out);
    ck.require(files_a == files_b, "both trees contain the same file set");
    if (files_a != files_b) return;

    int identical = 0;
    for (const auto& rel : files_a) {
        const auto a = read_file((first / rel).string());
        const auto b = read_file((out / rel).string());
        ck.require(a.has_value() && b.has_value(), rel + " readable in both trees");
        if (!a || !b) continue;
        if (rel == "manifest.json") {
            // wall_seconds measures elapsed time and cannot repeat; everything
            // else in the manifest must match, including every file hash
            auto ja = nlohmann::json::parse(*a);
            auto jb = nlohmann::json::parse(*b);
            ck.require(ja.contains("wall_seconds") && jb.contains("wall_seconds"),
                       "manifests carry wall_seconds");
            ja.erase("wall_seconds");
            jb.erase("wall_seconds");
            ck.require(ja == jb, "manifests identical after dropping wall_seconds");
        } else {
            ck.require(*a == *b, rel + " byte-identical across invocations");
            if (*a == *b) ++identical;
        }
    }
    ck.note(std::to_string(identical) + " of " + std::to_string(files_a.size()) +
            " files byte-identical; manifest.json matches after dropping wall_seconds");
    fs::remove_all(out);
    fs::remove_all(first);
}

}  // namespace

int main() {
    std::printf("qrisk acceptance gate\n");
    run_check(1, "circuit shapes", check_circuits);
    run_check(2, "cohort 2x2 statistics", check_cohort_stats);
    run_check(3, "likelihood-ratio arithmetic", check_lrt);
    run_check(4, "depolarizing channel", check_noise);
    run_check(5, "shot/exact agreement", check_modes);
    run_check(6, "optimizer accuracy", check_optim);
    run_check(7, "qnn training at desk scale", check_training);
    run_check(8, "metric oracles", check_metrics);
    run_check(9, "importance properties", check_importance);
    run_check(10, "end-to-end determinism", check_determinism);

    std::printf("\n%d passed", g_passed);
    if (g_known > 0) std::printf(", %d known divergence%s", g_known, g_known == 1 ? "" : "s");
    if (g_failed > 0) std::printf(", %d FAILED", g_failed);
    std::printf(" (of 10 checks)\n");
    return g_failed == 0 ? 0 : 1;
}
