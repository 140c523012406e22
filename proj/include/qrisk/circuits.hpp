#pragma once
#include "qrisk/qsim.hpp"

namespace qrisk::circuits {

enum class PairPhase { product, pi_shifted_product };

// Pauli-Z evolution feature map: per repetition, H on every qubit, a P(2*x_i)
// phase per qubit, then for every pair i<j (lexicographic order) the block
// CNOT(i,j), P(2*phi(x_i,x_j)) on j, CNOT(i,j).
struct FeatureMapSpec {
    int n_features = 4;
    int reps = 1;
    PairPhase convention = PairPhase::product;
};

enum class AnsatzFamily { real_amplitudes, efficient_su2 };
enum class RotationPair { ry_rz, rx_ry };

// Hardware-efficient ansatz with linear CNOT entanglement. real_amplitudes:
// an RY rotation layer, then reps x (CNOT chain + RY layer).  efficient_su2:
// the same scheme with two rotations per qubit per layer.  Trainable
// parameters are indexed layer-major, qubit-minor, rotation-axis-minor.
struct AnsatzSpec {
    AnsatzFamily family = AnsatzFamily::efficient_su2;
    int n_qubits = 4;
    int reps = 3;
    RotationPair rotations = RotationPair::ry_rz;

    std::size_t n_parameters() const;
};

qsim::Circuit build_feature_map(const FeatureMapSpec& spec);
qsim::Circuit build_ansatz(const AnsatzSpec& spec);

} // namespace qrisk::circuits
