#include "qrisk/qsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "qrisk/util/rng.hpp"

namespace qrisk::qsim {

const char* gate_name(GateKind k) {
    switch (k) {
        case GateKind::H: return "H";
        case GateKind::P: return "P";
        case GateKind::RX: return "RX";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::CNOT: return "CNOT";
    }
    return "?";
}

bool is_single_qubit(GateKind k) { return k != GateKind::CNOT; }

bool is_parameterized(GateKind k) {
    return k == GateKind::P || k == GateKind::RX || k == GateKind::RY || k == GateKind::RZ;
}

int Circuit::add_slot(ParamSlot s) {
    slots.push_back(std::move(s));
    return int(slots.size()) - 1;
}

void Circuit::push_slotted(Gate g, ParamSlot s) {
    g.slot = add_slot(std::move(s));
    g.theta_bound = false;
    gates.push_back(g);
}

std::size_t Circuit::n_theta_slots() const {
    std::size_t n = 0;
    for (const auto& s : slots)
        if (s.kind == ParamSlot::Kind::theta) ++n;
    return n;
}

std::vector<std::pair<int, std::string>> Circuit::parameter_slots() const {
    std::vector<std::pair<int, std::string>> out;
    for (std::size_t i = 0; i < gates.size(); ++i)
        if (gates[i].slot >= 0) out.emplace_back(int(i), slots[gates[i].slot].name);
    return out;
}

namespace {

double slot_angle(const ParamSlot& s, const std::vector<double>* x, const std::vector<double>* th,
                  bool& resolved) {
    resolved = true;
    switch (s.kind) {
        case ParamSlot::Kind::theta:
            if (!th) break;
            if (std::size_t(s.index) >= th->size())
                throw std::invalid_argument("bind: theta vector too short");
            return (*th)[s.index];
        case ParamSlot::Kind::feature:
            if (!x) break;
            if (std::size_t(s.index) >= x->size())
                throw std::invalid_argument("bind: feature vector too short");
            return 2.0 * (*x)[s.index];
        case ParamSlot::Kind::feature_pair: {
            if (!x) break;
            if (std::size_t(s.index) >= x->size() || std::size_t(s.index2) >= x->size())
                throw std::invalid_argument("bind: feature vector too short");
            const double xi = (*x)[s.index], xj = (*x)[s.index2];
            const double pi = std::numbers::pi;
            const double phi = s.pi_shifted ? (pi - xi) * (pi - xj) : xi * xj;
            return 2.0 * phi;
        }
    }
    resolved = false;
    return 0.0;
}

} // namespace

Circuit Circuit::bind(const std::vector<double>* features, const std::vector<double>* thetas) const {
    Circuit out = *this;
    for (auto& g : out.gates) {
        if (g.slot < 0) continue;
        bool resolved = false;
        const double angle = slot_angle(out.slots[g.slot], features, thetas, resolved);
        if (resolved) {
            g.theta = angle;
            g.theta_bound = true;
        }
    }
    return out;
}

Circuit Circuit::unbind() const {
    Circuit out = *this;
    for (auto& g : out.gates) {
        if (g.slot < 0) continue;
        g.theta = 0.0;
        g.theta_bound = false;
    }
    return out;
}

bool Circuit::fully_bound() const {
    return std::all_of(gates.begin(), gates.end(), [](const Gate& g) { return g.theta_bound; });
}

Circuit compose(const Circuit& a, const Circuit& b) {
    if (a.n_qubits != b.n_qubits) throw std::invalid_argument("compose: qubit count mismatch");
    Circuit out = a;
    out.barriers.push_back(int(out.gates.size()));
    for (Gate g : b.gates) {
        if (g.slot >= 0) g.slot += int(a.slots.size());
        out.gates.push_back(g);
    }
    for (const auto& s : b.slots) out.slots.push_back(s);
    for (int pos : b.barriers) out.barriers.push_back(pos + int(a.gates.size()));
    return out;
}

int circuit_depth(const Circuit& c) {
    std::vector<int> depth(c.n_qubits, 0);
    std::vector<int> barriers = c.barriers;
    std::sort(barriers.begin(), barriers.end());
    std::size_t bi = 0;
    for (std::size_t gi = 0; gi < c.gates.size(); ++gi) {
        while (bi < barriers.size() && barriers[bi] <= int(gi)) {
            const int m = depth.empty() ? 0 : *std::max_element(depth.begin(), depth.end());
            std::fill(depth.begin(), depth.end(), m);
            ++bi;
        }
        const Gate& g = c.gates[gi];
        int d = depth[g.target];
        if (g.kind == GateKind::CNOT) d = std::max(d, depth[g.control]);
        ++d;
        depth[g.target] = d;
        if (g.kind == GateKind::CNOT) depth[g.control] = d;
    }
    return depth.empty() ? 0 : *std::max_element(depth.begin(), depth.end());
}

std::map<GateKind, int> gate_census(const Circuit& c) {
    std::map<GateKind, int> census;
    for (const auto& g : c.gates) ++census[g.kind];
    return census;
}

std::string dump_circuit(const Circuit& c) {
    std::ostringstream os;
    for (std::size_t i = 0; i < c.gates.size(); ++i) {
        const Gate& g = c.gates[i];
        os << i << ' ' << gate_name(g.kind) << ' ';
        if (g.kind == GateKind::CNOT)
            os << g.control << ' ' << g.target;
        else
            os << g.target;
        os << ' ';
        if (!is_parameterized(g.kind))
            os << '-';
        else if (g.slot >= 0 && !g.theta_bound)
            os << c.slots[g.slot].name;
        else {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.10g", g.theta);
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

std::array<std::array<cplx, 4>, 4> NoiseModel::kraus_operators() const {
    const double p = p_gate;
    const cplx i(0.0, 1.0);
    // Each entry is a 2x2 matrix in row-major order {m00, m01, m10, m11}.
    std::array<std::array<cplx, 4>, 4> ks{};
    const double s0 = std::sqrt(1.0 - p), s1 = std::sqrt(p / 3.0);
    ks[0] = {s0, 0.0, 0.0, s0};          // I
    ks[1] = {0.0, s1, s1, 0.0};          // X
    ks[2] = {0.0, -i * s1, i * s1, 0.0}; // Y
    ks[3] = {s1, 0.0, 0.0, -s1};         // Z
    return ks;
}

QuantumState QuantumState::zero_pure(int n) {
    QuantumState st;
    st.mode = Mode::pure;
    st.n_qubits = n;
    st.amps.assign(std::size_t(1) << n, 0.0);
    st.amps[0] = 1.0;
    return st;
}

QuantumState QuantumState::zero_mixed(int n) {
    QuantumState st;
    st.mode = Mode::mixed;
    st.n_qubits = n;
    const std::size_t d = std::size_t(1) << n;
    st.rho.assign(d * d, 0.0);
    st.rho[0] = 1.0;
    return st;
}

std::array<cplx, 4> single_qubit_matrix(GateKind k, double th) {
    const cplx i(0.0, 1.0);
    switch (k) {
        case GateKind::H: {
            const double s = 1.0 / std::sqrt(2.0);
            return {s, s, s, -s};
        }
        case GateKind::P:
            return {1.0, 0.0, 0.0, std::exp(i * th)};
        case GateKind::RX:
            return {std::cos(th / 2), -i * std::sin(th / 2), -i * std::sin(th / 2),
                    std::cos(th / 2)};
        case GateKind::RY:
            return {std::cos(th / 2), -std::sin(th / 2), std::sin(th / 2), std::cos(th / 2)};
        case GateKind::RZ:
            return {std::exp(-i * th / 2.0), 0.0, 0.0, std::exp(i * th / 2.0)};
        case GateKind::CNOT:
            break;
    }
    throw std::logic_error("single_qubit_matrix: not a single-qubit gate");
}

namespace {

std::array<cplx, 4> gate_matrix(const Gate& g) { return single_qubit_matrix(g.kind, g.theta); }

void apply_1q_pure(QuantumState& st, int q, const std::array<cplx, 4>& u) {
    const std::size_t d = st.dim(), m = std::size_t(1) << q;
    for (std::size_t i = 0; i < d; ++i) {
        if (i & m) continue;
        const cplx a0 = st.amps[i], a1 = st.amps[i | m];
        st.amps[i] = u[0] * a0 + u[1] * a1;
        st.amps[i | m] = u[2] * a0 + u[3] * a1;
    }
}

void apply_cnot_pure(QuantumState& st, int control, int target) {
    const std::size_t d = st.dim();
    const std::size_t mc = std::size_t(1) << control, mt = std::size_t(1) << target;
    for (std::size_t i = 0; i < d; ++i)
        if ((i & mc) && !(i & mt)) std::swap(st.amps[i], st.amps[i | mt]);
}

void apply_1q_mixed(QuantumState& st, int q, const std::array<cplx, 4>& u) {
    const std::size_t d = st.dim(), m = std::size_t(1) << q;
    auto& r = st.rho;
    // rho <- U rho, acting on row pairs.
    for (std::size_t i = 0; i < d; ++i) {
        if (i & m) continue;
        for (std::size_t j = 0; j < d; ++j) {
            const cplx a0 = r[i * d + j], a1 = r[(i | m) * d + j];
            r[i * d + j] = u[0] * a0 + u[1] * a1;
            r[(i | m) * d + j] = u[2] * a0 + u[3] * a1;
        }
    }
    // rho <- rho U^dagger, acting on column pairs.
    const cplx c00 = std::conj(u[0]), c01 = std::conj(u[1]);
    const cplx c10 = std::conj(u[2]), c11 = std::conj(u[3]);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            if (j & m) continue;
            const cplx a0 = r[i * d + j], a1 = r[i * d + (j | m)];
            r[i * d + j] = a0 * c00 + a1 * c01;
            r[i * d + (j | m)] = a0 * c10 + a1 * c11;
        }
    }
}

void apply_cnot_mixed(QuantumState& st, int control, int target) {
    const std::size_t d = st.dim();
    const std::size_t mc = std::size_t(1) << control, mt = std::size_t(1) << target;
    auto& r = st.rho;
    for (std::size_t i = 0; i < d; ++i) {
        if (!((i & mc) && !(i & mt))) continue;
        for (std::size_t j = 0; j < d; ++j)
            std::swap(r[i * d + j], r[(i | mt) * d + j]);
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            if (!((j & mc) && !(j & mt))) continue;
            std::swap(r[i * d + j], r[i * d + (j | mt)]);
        }
    }
}

void require_bound(const Gate& g) {
    if (!g.theta_bound) throw std::invalid_argument("apply_gate: unbound parameter slot");
}

} // namespace

void apply_gate(QuantumState& st, const Gate& g) {
    require_bound(g);
    if (g.target < 0 || g.target >= st.n_qubits)
        throw std::out_of_range("apply_gate: target qubit out of range");
    if (g.kind == GateKind::CNOT) {
        if (g.control < 0 || g.control >= st.n_qubits)
            throw std::out_of_range("apply_gate: control qubit out of range");
        if (g.control == g.target) throw std::invalid_argument("apply_gate: control == target");
        if (st.mode == QuantumState::Mode::pure)
            apply_cnot_pure(st, g.control, g.target);
        else
            apply_cnot_mixed(st, g.control, g.target);
        return;
    }
    const auto u = gate_matrix(g);
    if (st.mode == QuantumState::Mode::pure)
        apply_1q_pure(st, g.target, u);
    else
        apply_1q_mixed(st, g.target, u);
}

void apply_depolarizing(QuantumState& st, int qubit, double p) {
    if (st.mode != QuantumState::Mode::mixed)
        throw std::invalid_argument("apply_depolarizing: mixed state required");
    if (qubit < 0 || qubit >= st.n_qubits)
        throw std::out_of_range("apply_depolarizing: qubit out of range");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("apply_depolarizing: p outside [0,1]");
    if (p == 0.0) return;
    const std::size_t d = st.dim(), m = std::size_t(1) << qubit;
    auto& r = st.rho;
    // Entry-wise form of (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z):
    // entries whose row/column agree on the qubit mix with their flipped
    // partner, entries that disagree are scaled by (1 - 4p/3).
    const double keep = 1.0 - 2.0 * p / 3.0, swap = 2.0 * p / 3.0, off = 1.0 - 4.0 * p / 3.0;
    for (std::size_t i = 0; i < d; ++i) {
        if (i & m) continue;
        for (std::size_t j = 0; j < d; ++j) {
            if (j & m) continue;
            const std::size_t i1 = i | m, j1 = j | m;
            const cplx a = r[i * d + j], dd = r[i1 * d + j1];
            r[i * d + j] = keep * a + swap * dd;
            r[i1 * d + j1] = keep * dd + swap * a;
            r[i * d + j1] *= off;
            r[i1 * d + j] *= off;
        }
    }
}

std::vector<double> run_exact(const Circuit& c, const NoiseModel& noise) {
    if (!c.fully_bound()) throw std::invalid_argument("run_exact: circuit has unbound slots");
    QuantumState st = QuantumState::zero_mixed(c.n_qubits);
    for (const auto& g : c.gates) {
        apply_gate(st, g);
        if (is_single_qubit(g.kind)) apply_depolarizing(st, g.target, noise.p_gate);
    }
    const std::size_t d = st.dim();
    std::vector<double> probs(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) probs[i] = st.rho[i * d + i].real();
    return probs;
}

std::string to_bitstring(std::size_t index, int n_qubits) {
    std::string s(n_qubits, '0');
    for (int q = 0; q < n_qubits; ++q)
        if (index & (std::size_t(1) << q)) s[q] = '1';
    return s;
}

namespace {

std::size_t sample_one_shot(const Circuit& c, const NoiseModel& noise, std::mt19937_64& rng) {
    QuantumState st = QuantumState::zero_pure(c.n_qubits);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double p = noise.p_gate;
    for (const auto& g : c.gates) {
        apply_gate(st, g);
        if (!is_single_qubit(g.kind) || p == 0.0) continue;
        const double r = uni(rng);
        if (r >= p) continue;
        const int pauli = std::min(2, int((r / p) * 3.0));
        const std::size_t m = std::size_t(1) << g.target;
        const std::size_t d = st.dim();
        for (std::size_t i = 0; i < d; ++i) {
            if (i & m) continue;
            cplx& a0 = st.amps[i];
            cplx& a1 = st.amps[i | m];
            if (pauli == 0) {  // X
                std::swap(a0, a1);
            } else if (pauli == 1) {  // Y
                const cplx t = a0;
                a0 = cplx(0.0, -1.0) * a1;
                a1 = cplx(0.0, 1.0) * t;
            } else {  // Z
                a1 = -a1;
            }
        }
    }
    const double r = uni(rng);
    double acc = 0.0;
    const std::size_t d = st.dim();
    for (std::size_t i = 0; i < d; ++i) {
        acc += std::norm(st.amps[i]);
        if (r < acc) return i;
    }
    return d - 1;
}

ShotResult tally(const std::vector<std::uint64_t>& hist, int n_qubits, std::uint64_t shots) {
    ShotResult res;
    res.shots = shots;
    for (std::size_t i = 0; i < hist.size(); ++i)
        if (hist[i]) res.counts[to_bitstring(i, n_qubits)] = hist[i];
    return res;
}

} // namespace

ShotResult run_shots_serial(const Circuit& c, const NoiseModel& noise, std::uint64_t shots,
                            std::uint64_t seed) {
    if (!c.fully_bound()) throw std::invalid_argument("run_shots: circuit has unbound slots");
    std::vector<std::uint64_t> hist(std::size_t(1) << c.n_qubits, 0);
    for (std::uint64_t s = 0; s < shots; ++s) {
        auto rng = make_rng(seed, s);
        ++hist[sample_one_shot(c, noise, rng)];
    }
    return tally(hist, c.n_qubits, shots);
}

ShotResult run_shots(const Circuit& c, const NoiseModel& noise, std::uint64_t shots,
                     std::uint64_t seed) {
    if (!c.fully_bound()) throw std::invalid_argument("run_shots: circuit has unbound slots");
    const std::size_t d = std::size_t(1) << c.n_qubits;
    std::vector<std::uint64_t> hist(d, 0);
#pragma omp parallel
    {
        std::vector<std::uint64_t> local(d, 0);
#pragma omp for schedule(static)
        for (long long s = 0; s < (long long)shots; ++s) {
            auto rng = make_rng(seed, std::uint64_t(s));
            ++local[sample_one_shot(c, noise, rng)];
        }
#pragma omp critical
        for (std::size_t i = 0; i < d; ++i) hist[i] += local[i];
    }
    return tally(hist, c.n_qubits, shots);
}

} // namespace qrisk::qsim
