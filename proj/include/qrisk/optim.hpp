#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qrisk/util/linalg.hpp"

namespace qrisk::optim {

struct Objective {
    int dim = 0;
    std::function<double(const Vec&)> f;
};

enum class OptStatus { converged, budget_exhausted, line_search_failed, diverged };

const char* status_name(OptStatus s);

struct OptResult {
    Vec best_x;
    double best_f = 0.0;
    std::vector<double> trace;  // best value seen after each outer iteration
    long n_evals = 0;
    OptStatus status = OptStatus::budget_exhausted;
};

// Shared knob: budget counts outer iterations (generations for CMA-ES,
// model steps for COBYLA, line-search iterations for BFGS/SLSQP).
struct CmaesConfig {
    int budget = 75;
    double sigma0 = 0.15;
    double parent_fraction = 0.5;
    double c_mean = 1.0;
    double damping = 1.0;  // scales the standard CSA damping term
    std::uint64_t seed = 0;
};

struct SpsaConfig {
    int budget = 75;
    double alpha = 0.602;  // gain decay exponents
    double gamma = 0.101;
    double allowed_increase = 1e-3;  // blocking threshold
    int patience = 10;               // accepted steps without improvement
    std::uint64_t seed = 0;
};

struct CobylaConfig {
    int budget = 75;
    double rho_begin = 1.0;
    double rho_end = 1e-4;
};

struct QuasiNewtonConfig {
    int budget = 75;
    double ftol = 1e-4;
    double grad_h = 1e-6;  // relative central-difference step
    double armijo_c1 = 1e-4;
};

int cmaes_lambda(int dim);  // population size ceil(4 + 3 ln m)

OptResult cmaes_minimize(const Objective& obj, const Vec& x0, const CmaesConfig& cfg);
OptResult spsa_minimize(const Objective& obj, const Vec& x0, const SpsaConfig& cfg);
OptResult cobyla_minimize(const Objective& obj, const Vec& x0, const CobylaConfig& cfg);
OptResult bfgs_minimize(const Objective& obj, const Vec& x0, const QuasiNewtonConfig& cfg);
OptResult slsqp_minimize(const Objective& obj, const Vec& x0, const QuasiNewtonConfig& cfg);

enum class Method { cmaes, spsa, cobyla, bfgs, slsqp };
const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct MethodConfig {
    Method method = Method::bfgs;
    int budget = 75;
    std::uint64_t seed = 0;
};

OptResult minimize(const Objective& obj, const Vec& x0, const MethodConfig& cfg);

} // namespace qrisk::optim
