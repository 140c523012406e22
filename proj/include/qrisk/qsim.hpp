#pragma once
#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace qrisk::qsim {

using cplx = std::complex<double>;

// Basis-state convention: qubit i maps to bit i of the index (basis state
// |s0 s1 ... s_{n-1}> has index sum_i s_i * 2^i), and bitstrings are written
// with qubit 0 as the leftmost character.
enum class GateKind { H, P, RX, RY, RZ, CNOT };

const char* gate_name(GateKind k);
bool is_single_qubit(GateKind k);
bool is_parameterized(GateKind k);

// Placeholder for an angle resolved at bind time. Feature slots produce the
// encoding angle 2*x_i; pair slots produce 2*phi(x_i, x_j) where phi is either
// the plain product or the pi-shifted product (pi-x_i)(pi-x_j). Theta slots
// take trainable parameters verbatim.
struct ParamSlot {
    enum class Kind { theta, feature, feature_pair };
    std::string name;
    Kind kind = Kind::theta;
    int index = 0;
    int index2 = 0;
    bool pi_shifted = false;
};

struct Gate {
    GateKind kind = GateKind::H;
    int target = 0;
    int control = -1;  // CNOT only
    double theta = 0.0;
    int slot = -1;  // index into Circuit::slots; -1 when the angle is fixed
    bool theta_bound = true;

    static Gate h(int q) { return {GateKind::H, q, -1, 0.0, -1, true}; }
    static Gate p(int q, double th) { return {GateKind::P, q, -1, th, -1, true}; }
    static Gate rx(int q, double th) { return {GateKind::RX, q, -1, th, -1, true}; }
    static Gate ry(int q, double th) { return {GateKind::RY, q, -1, th, -1, true}; }
    static Gate rz(int q, double th) { return {GateKind::RZ, q, -1, th, -1, true}; }
    static Gate cnot(int control, int target) {
        return {GateKind::CNOT, target, control, 0.0, -1, true};
    }
};

struct Circuit {
    int n_qubits = 0;
    std::vector<Gate> gates;
    std::vector<ParamSlot> slots;
    // Gate indices at which all qubits synchronize before the next gate.
    // compose() records one at each junction; they cost no depth themselves.
    std::vector<int> barriers;

    int add_slot(ParamSlot s);
    void push(Gate g) { gates.push_back(g); }
    void push_slotted(Gate g, ParamSlot s);

    std::size_t n_theta_slots() const;
    std::vector<std::pair<int, std::string>> parameter_slots() const;

    // Resolve slot angles. Passing nullptr leaves that slot family unbound.
    Circuit bind(const std::vector<double>* features, const std::vector<double>* thetas) const;
    // Clear the bound angle of every slotted gate (inverse of bind).
    Circuit unbind() const;
    bool fully_bound() const;
};

Circuit compose(const Circuit& a, const Circuit& b);
int circuit_depth(const Circuit& c);
std::map<GateKind, int> gate_census(const Circuit& c);
std::string dump_circuit(const Circuit& c);

struct NoiseModel {
    double p_gate = 0.0;  // depolarizing probability after each 1-qubit gate

    // Kraus set {sqrt(1-p) I, sqrt(p/3) X, sqrt(p/3) Y, sqrt(p/3) Z}.
    std::array<std::array<cplx, 4>, 4> kraus_operators() const;
};

struct QuantumState {
    enum class Mode { pure, mixed };
    Mode mode = Mode::pure;
    int n_qubits = 0;
    std::vector<cplx> amps;  // pure: 2^n amplitudes
    std::vector<cplx> rho;   // mixed: 2^n x 2^n density matrix, row-major

    static QuantumState zero_pure(int n);
    static QuantumState zero_mixed(int n);
    std::size_t dim() const { return std::size_t(1) << n_qubits; }
};

void apply_gate(QuantumState& st, const Gate& g);
// rho -> (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z) on one qubit.
void apply_depolarizing(QuantumState& st, int qubit, double p);

// 2x2 matrix of a bound single-qubit gate, row-major {u00, u01, u10, u11}.
std::array<cplx, 4> single_qubit_matrix(GateKind k, double theta);

// Exact mixed-state evolution: every 1-qubit gate is followed by the
// depolarizing channel. Returns the diagonal of the final density matrix.
std::vector<double> run_exact(const Circuit& c, const NoiseModel& noise);

struct ShotResult {
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t shots = 0;
};

// Trajectory sampling: per shot, each 1-qubit gate is followed by a Pauli
// drawn with probabilities (1-p, p/3, p/3, p/3); one basis outcome is sampled
// at the end. Shot s uses its own generator derived from (seed, s), so the
// result is reproducible and independent of the parallel schedule.
ShotResult run_shots(const Circuit& c, const NoiseModel& noise, std::uint64_t shots,
                     std::uint64_t seed);
ShotResult run_shots_serial(const Circuit& c, const NoiseModel& noise, std::uint64_t shots,
                            std::uint64_t seed);

std::string to_bitstring(std::size_t index, int n_qubits);

} // namespace qrisk::qsim
