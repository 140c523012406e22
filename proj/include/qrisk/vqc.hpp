#pragma once
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qrisk/circuits.hpp"
#include "qrisk/optim.hpp"
#include "qrisk/qsim.hpp"

namespace qrisk::vqc {

enum class EvalMode { exact, shots };

struct VqcModel {
    circuits::FeatureMapSpec feature_map;
    circuits::AnsatzSpec ansatz;
    std::vector<double> theta;
    qsim::NoiseModel noise;
    EvalMode mode = EvalMode::exact;
    std::uint64_t shots = 1024;
    std::uint64_t shot_seed = 0;
};

// Class decoding: outcome bitstrings with even parity vote for class 0, odd
// parity for class 1.
int parity(const std::string& bitstring);

struct Proba {
    double p0 = 0.0, p1 = 0.0;
};

Proba predict_proba(const VqcModel& m, const std::vector<double>& x);

// Internal plan for the cached exact path: the state is carried as the real
// coefficient vector r_P = tr(P rho) over the n-qubit Pauli basis, where
// rotations act as 4x4 real transfer blocks with the depolarizing factor
// folded in, CNOTs permute coefficients with signs, and the class split
// reads off the single all-Z coefficient.
struct FastPlan;

// Reusable evaluation state. In exact mode the post-feature-map density
// matrix of each sample depends only on the data, so it is computed once per
// dataset and the ansatz suffix is replayed per parameter vector.
class Evaluator {
public:
    explicit Evaluator(const VqcModel& m);

    Proba predict(const std::vector<double>& x, const std::vector<double>& theta,
                  std::uint64_t sample_index) const;

    // p(class 1) per row; the OpenMP version distributes rows over threads
    // and is bit-identical to the serial version for any thread count.
    std::vector<double> predict_batch(const std::vector<std::vector<double>>& X,
                                      const std::vector<double>& theta) const;
    std::vector<double> predict_batch_serial(const std::vector<std::vector<double>>& X,
                                             const std::vector<double>& theta) const;
    // Serial density-matrix reference for the cached exact path; the Pauli
    // fast path above must agree with it to 1e-12.
    std::vector<double> predict_batch_reference(const std::vector<std::vector<double>>& X,
                                                const std::vector<double>& theta) const;

    void prepare_cache(const std::vector<std::vector<double>>& X);
    void drop_cache();

    const VqcModel& model() const { return model_; }
    const qsim::Circuit& feature_circuit() const { return feature_circuit_; }
    const qsim::Circuit& ansatz_circuit() const { return ansatz_circuit_; }

private:
    Proba predict_exact_cached(std::size_t row, const std::vector<double>& theta) const;
    Proba predict_exact_cached_fast(std::size_t row, const std::vector<double>& theta) const;
    double predict_row(const std::vector<std::vector<double>>& X, bool cached, std::size_t i,
                       const std::vector<double>& theta) const;

    VqcModel model_;
    qsim::Circuit feature_circuit_;
    qsim::Circuit ansatz_circuit_;
    std::shared_ptr<const FastPlan> fast_;  // null when the ansatz doesn't fit the plan
    const std::vector<std::vector<double>>* cached_X_ = nullptr;
    std::vector<std::vector<qsim::cplx>> prefix_rho_;
    std::vector<std::vector<double>> prefix_pauli_;
};

// Mean binary cross-entropy with probabilities clamped to [1e-12, 1-1e-12].
double bce_loss(const std::vector<double>& p1, const std::vector<int>& y);
double loss(const VqcModel& m, const std::vector<std::vector<double>>& X,
            const std::vector<int>& y);

enum class TrainStatus { ok, diverged, line_search_failed };

struct TrainRecord {
    std::vector<double> loss_trace;  // best value per optimizer iteration
    std::vector<double> best_theta;
    double initial_loss = 0.0;
    double best_loss = 0.0;
    long n_evals = 0;
    double wall_seconds = 0.0;
    TrainStatus status = TrainStatus::ok;
};

// theta is initialized uniformly in [-pi, pi] from the run seed; the
// optimizer draws from an independent stream of the same seed.
TrainRecord train(VqcModel& m, const std::vector<std::vector<double>>& X,
                  const std::vector<int>& y, const optim::MethodConfig& opt,
                  std::uint64_t run_seed);

} // namespace qrisk::vqc
