#include "qrisk/vqc.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "qrisk/util/rng.hpp"

namespace qrisk::vqc {

int parity(const std::string& bitstring) {
    int p = 0;
    for (char ch : bitstring) {
        if (ch != '0' && ch != '1') throw std::invalid_argument("parity: non-binary character");
        p ^= (ch == '1');
    }
    return p;
}

namespace {

using qsim::cplx;

// Single-qubit Paulis I, X, Y, Z, row-major.
constexpr std::array<std::array<cplx, 4>, 4> pauli_matrices() {
    const cplx i(0.0, 1.0);
    return {{{1, 0, 0, 1}, {0, 1, 1, 0}, {0, -i, i, 0}, {1, 0, 0, -1}}};
}

std::array<cplx, 4> mat_mul_2x2(const std::array<cplx, 4>& a, const std::array<cplx, 4>& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

std::array<cplx, 4> mat_adjoint_2x2(const std::array<cplx, 4>& a) {
    return {std::conj(a[0]), std::conj(a[2]), std::conj(a[1]), std::conj(a[3])};
}

// Transfer block of "unitary u then depolarizing(p)" on the coefficient
// quartet (I, X, Y, Z) of one qubit: M[a][b] = Re tr(P_a u P_b u^dag) / 2
// with rows X, Y, Z scaled by (1 - 4p/3). Row/column 0 stay (1, 0, 0, 0)
// for any unitary, so only the lower-right 3x3 block is filled.
void rotation_transfer(const std::array<cplx, 4>& u, double off, double m[4][4]) {
    const auto paulis = pauli_matrices();
    const auto ud = mat_adjoint_2x2(u);
    m[0][0] = 1.0;
    m[0][1] = m[0][2] = m[0][3] = 0.0;
    m[1][0] = m[2][0] = m[3][0] = 0.0;
    for (int b = 1; b < 4; ++b) {
        const auto v = mat_mul_2x2(mat_mul_2x2(u, paulis[b]), ud);
        m[1][b] = off * 0.5 * (v[1] + v[2]).real();
        m[2][b] = off * 0.5 * (cplx(0.0, 1.0) * (v[1] - v[2])).real();
        m[3][b] = off * 0.5 * (v[0] - v[3]).real();
    }
}

struct CnotTable {
    std::vector<std::uint32_t> src;  // r_new[q] = sign[q] * r_old[src[q]]
    std::vector<double> sign;
};

struct FastOp {
    bool is_cnot = false;
    qsim::GateKind kind = qsim::GateKind::RY;
    int qubit = 0;      // rotations
    int theta_idx = 0;  // rotations
    int table = 0;      // CNOTs
};

int pauli_digit(std::size_t idx, int q) { return int(idx >> (2 * q)) & 3; }

std::size_t with_pauli_digit(std::size_t idx, int q, int digit) {
    return (idx & ~(std::size_t(3) << (2 * q))) | (std::size_t(digit) << (2 * q));
}

// Conjugation action of CNOT on two-qubit Pauli pairs, computed numerically:
// C (P_a x P_b) C is again a signed Pauli pair. Indexed [control][target].
struct CnotPairMap {
    int pa2[4][4], pb2[4][4];
    double sign[4][4];
};

CnotPairMap cnot_pair_map() {
    const auto paulis = pauli_matrices();
    // 4x4 two-qubit matrices with the control on bit 0, target on bit 1.
    auto kron = [&](int pa, int pb) {
        std::array<cplx, 16> m{};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const int c_i = i & 1, t_i = i >> 1, c_j = j & 1, t_j = j >> 1;
                m[i * 4 + j] = paulis[pa][c_i * 2 + c_j] * paulis[pb][t_i * 2 + t_j];
            }
        return m;
    };
    auto cnot_conj = [](const std::array<cplx, 16>& m) {
        // basis permutation |c,t> -> |c, t xor c>: row/col 1 <-> 3
        auto perm = [](int i) { return (i & 1) ? (i ^ 2) : i; };
        std::array<cplx, 16> out{};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) out[i * 4 + j] = m[perm(i) * 4 + perm(j)];
        return out;
    };
    CnotPairMap map{};
    for (int pa = 0; pa < 4; ++pa)
        for (int pb = 0; pb < 4; ++pb) {
            const auto t = cnot_conj(kron(pa, pb));
            bool found = false;
            for (int qa = 0; qa < 4 && !found; ++qa)
                for (int qb = 0; qb < 4 && !found; ++qb) {
                    const auto cand = kron(qa, qb);
                    cplx acc = 0.0;
                    for (int e = 0; e < 16; ++e) acc += t[e] * std::conj(cand[e]);
                    acc /= 4.0;
                    if (std::abs(acc) > 0.5) {
                        map.pa2[pa][pb] = qa;
                        map.pb2[pa][pb] = qb;
                        map.sign[pa][pb] = acc.real();
                        found = true;
                    }
                }
            if (!found) throw std::logic_error("cnot_pair_map: conjugation left Pauli basis");
        }
    return map;
}

}  // namespace

struct FastPlan {
    int n_qubits = 0;
    std::size_t dim_p = 0;
    double off = 1.0;
    std::vector<FastOp> ops;
    std::vector<CnotTable> tables;
};

namespace {

std::shared_ptr<const FastPlan> build_fast_plan(const qsim::Circuit& ansatz, double p_gate) {
    auto plan = std::make_shared<FastPlan>();
    plan->n_qubits = ansatz.n_qubits;
    plan->dim_p = std::size_t(1) << (2 * ansatz.n_qubits);
    plan->off = 1.0 - 4.0 * p_gate / 3.0;

    const auto pair_map = cnot_pair_map();
    std::map<std::pair<int, int>, int> table_of;
    for (const auto& g : ansatz.gates) {
        FastOp op;
        if (g.kind == qsim::GateKind::CNOT) {
            op.is_cnot = true;
            const auto key = std::make_pair(g.control, g.target);
            auto it = table_of.find(key);
            if (it == table_of.end()) {
                CnotTable t;
                t.src.resize(plan->dim_p);
                t.sign.resize(plan->dim_p);
                for (std::size_t q = 0; q < plan->dim_p; ++q) {
                    const int pc = pauli_digit(q, g.control), pt = pauli_digit(q, g.target);
                    std::size_t s = with_pauli_digit(q, g.control, pair_map.pa2[pc][pt]);
                    s = with_pauli_digit(s, g.target, pair_map.pb2[pc][pt]);
                    t.src[q] = std::uint32_t(s);
                    t.sign[q] = pair_map.sign[pc][pt];
                }
                it = table_of.emplace(key, int(plan->tables.size())).first;
                plan->tables.push_back(std::move(t));
            }
            op.table = it->second;
        } else if ((g.kind == qsim::GateKind::RX || g.kind == qsim::GateKind::RY ||
                    g.kind == qsim::GateKind::RZ) &&
                   g.slot >= 0 && ansatz.slots[g.slot].kind == qsim::ParamSlot::Kind::theta) {
            op.kind = g.kind;
            op.qubit = g.target;
            op.theta_idx = ansatz.slots[g.slot].index;
        } else {
            return nullptr;  // unsupported gate shape; use the reference path
        }
        plan->ops.push_back(op);
    }
    return plan;
}

void apply_rotation_block(std::vector<double>& r, int q, const double m[4][4]) {
    const std::size_t stride = std::size_t(1) << (2 * q);
    const std::size_t dim = r.size();
    for (std::size_t hi = 0; hi < dim; hi += 4 * stride) {
        for (std::size_t lo = 0; lo < stride; ++lo) {
            double* base = r.data() + hi + lo;
            const double v1 = base[stride], v2 = base[2 * stride], v3 = base[3 * stride];
            base[stride] = m[1][1] * v1 + m[1][2] * v2 + m[1][3] * v3;
            base[2 * stride] = m[2][1] * v1 + m[2][2] * v2 + m[2][3] * v3;
            base[3 * stride] = m[3][1] * v1 + m[3][2] * v2 + m[3][3] * v3;
        }
    }
}

// r_P = Re tr(P rho) for every n-qubit Pauli P (digit q of the base-4 index
// selects I, X, Y or Z on qubit q).
std::vector<double> rho_to_pauli_coeffs(const std::vector<cplx>& rho, int n) {
    const std::size_t d = std::size_t(1) << n, dim_p = std::size_t(1) << (2 * n);
    std::vector<double> r(dim_p);
    for (std::size_t p = 0; p < dim_p; ++p) {
        std::size_t xmask = 0;
        for (int q = 0; q < n; ++q) {
            const int dig = pauli_digit(p, q);
            if (dig == 1 || dig == 2) xmask |= std::size_t(1) << q;
        }
        cplx acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const std::size_t j = i ^ xmask;
            cplx w = 1.0;
            for (int q = 0; q < n; ++q) {
                const int dig = pauli_digit(p, q);
                const bool bit = (i >> q) & 1;
                if (dig == 2) w *= bit ? cplx(0.0, 1.0) : cplx(0.0, -1.0);
                else if (dig == 3 && bit) w = -w;
            }
            acc += w * rho[j * d + i];
        }
        r[p] = acc.real();
    }
    return r;
}

}  // namespace

namespace {

Proba parity_split(const std::vector<double>& probs) {
    Proba out;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (std::popcount(i) & 1)
            out.p1 += probs[i];
        else
            out.p0 += probs[i];
    }
    return out;
}

Proba parity_split(const qsim::ShotResult& shots) {
    Proba out;
    for (const auto& [bits, count] : shots.counts) {
        const double f = double(count) / double(shots.shots);
        if (parity(bits))
            out.p1 += f;
        else
            out.p0 += f;
    }
    return out;
}

} // namespace

Evaluator::Evaluator(const VqcModel& m)
    : model_(m),
      feature_circuit_(circuits::build_feature_map(m.feature_map)),
      ansatz_circuit_(circuits::build_ansatz(m.ansatz)) {
    if (feature_circuit_.n_qubits != ansatz_circuit_.n_qubits)
        throw std::invalid_argument("vqc: feature map and ansatz width mismatch");
    fast_ = build_fast_plan(ansatz_circuit_, model_.noise.p_gate);
}

void Evaluator::prepare_cache(const std::vector<std::vector<double>>& X) {
    cached_X_ = &X;
    prefix_rho_.assign(X.size(), {});
    prefix_pauli_.assign(fast_ ? X.size() : 0, {});
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)X.size(); ++i) {
        const auto bound = feature_circuit_.bind(&X[i], nullptr);
        qsim::QuantumState st = qsim::QuantumState::zero_mixed(bound.n_qubits);
        for (const auto& g : bound.gates) {
            qsim::apply_gate(st, g);
            if (qsim::is_single_qubit(g.kind))
                qsim::apply_depolarizing(st, g.target, model_.noise.p_gate);
        }
        if (fast_) prefix_pauli_[i] = rho_to_pauli_coeffs(st.rho, st.n_qubits);
        prefix_rho_[i] = std::move(st.rho);
    }
}

void Evaluator::drop_cache() {
    cached_X_ = nullptr;
    prefix_rho_.clear();
    prefix_pauli_.clear();
}

Proba Evaluator::predict_exact_cached(std::size_t row, const std::vector<double>& theta) const {
    qsim::QuantumState st;
    st.mode = qsim::QuantumState::Mode::mixed;
    st.n_qubits = ansatz_circuit_.n_qubits;
    st.rho = prefix_rho_[row];
    const auto bound = ansatz_circuit_.bind(nullptr, &theta);
    for (const auto& g : bound.gates) {
        qsim::apply_gate(st, g);
        if (qsim::is_single_qubit(g.kind))
            qsim::apply_depolarizing(st, g.target, model_.noise.p_gate);
    }
    const std::size_t d = st.dim();
    std::vector<double> probs(d);
    for (std::size_t i = 0; i < d; ++i) probs[i] = st.rho[i * d + i].real();
    return parity_split(probs);
}

Proba Evaluator::predict_exact_cached_fast(std::size_t row,
                                           const std::vector<double>& theta) const {
    const FastPlan& plan = *fast_;
    std::vector<double> r = prefix_pauli_[row];
    std::vector<double> scratch(r.size());
    double m[4][4];
    for (const auto& op : plan.ops) {
        if (op.is_cnot) {
            const CnotTable& t = plan.tables[op.table];
            for (std::size_t q = 0; q < r.size(); ++q) scratch[q] = t.sign[q] * r[t.src[q]];
            std::swap(r, scratch);
        } else {
            rotation_transfer(qsim::single_qubit_matrix(op.kind, theta[op.theta_idx]),
                              plan.off, m);
            apply_rotation_block(r, op.qubit, m);
        }
    }
    // Parity readout: P(even) = (1 + <Z...Z>)/2, and the all-Z coefficient
    // sits at the last index.
    const double z = r.back();
    Proba pr;
    pr.p0 = 0.5 * (1.0 + z);
    pr.p1 = 0.5 * (1.0 - z);
    return pr;
}

Proba Evaluator::predict(const std::vector<double>& x, const std::vector<double>& theta,
                         std::uint64_t sample_index) const {
    const auto circuit =
        qsim::compose(feature_circuit_, ansatz_circuit_).bind(&x, &theta);
    if (model_.mode == EvalMode::exact)
        return parity_split(qsim::run_exact(circuit, model_.noise));
    const auto shots = qsim::run_shots(circuit, model_.noise, model_.shots,
                                       derive_seed(model_.shot_seed, sample_index));
    return parity_split(shots);
}

double Evaluator::predict_row(const std::vector<std::vector<double>>& X, bool cached,
                              std::size_t i, const std::vector<double>& theta) const {
    if (!cached) return predict(X[i], theta, i).p1;
    if (fast_) return predict_exact_cached_fast(i, theta).p1;
    return predict_exact_cached(i, theta).p1;
}

std::vector<double> Evaluator::predict_batch_serial(const std::vector<std::vector<double>>& X,
                                                    const std::vector<double>& theta) const {
    std::vector<double> p1(X.size(), 0.0);
    const bool cached = model_.mode == EvalMode::exact && cached_X_ == &X;
    for (std::size_t i = 0; i < X.size(); ++i) p1[i] = predict_row(X, cached, i, theta);
    return p1;
}

std::vector<double> Evaluator::predict_batch(const std::vector<std::vector<double>>& X,
                                             const std::vector<double>& theta) const {
    std::vector<double> p1(X.size(), 0.0);
    const bool cached = model_.mode == EvalMode::exact && cached_X_ == &X;
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)X.size(); ++i) p1[i] = predict_row(X, cached, i, theta);
    return p1;
}

std::vector<double> Evaluator::predict_batch_reference(const std::vector<std::vector<double>>& X,
                                                       const std::vector<double>& theta) const {
    std::vector<double> p1(X.size(), 0.0);
    const bool cached = model_.mode == EvalMode::exact && cached_X_ == &X;
    for (std::size_t i = 0; i < X.size(); ++i)
        p1[i] = cached ? predict_exact_cached(i, theta).p1 : predict(X[i], theta, i).p1;
    return p1;
}

Proba predict_proba(const VqcModel& m, const std::vector<double>& x) {
    Evaluator ev(m);
    const auto pr = ev.predict(x, m.theta, 0);
    return pr;
}

double bce_loss(const std::vector<double>& p1, const std::vector<int>& y) {
    if (p1.empty() || p1.size() != y.size()) throw std::invalid_argument("bce_loss: bad inputs");
    const double eps = 1e-12;
    double s = 0.0;
    for (std::size_t i = 0; i < p1.size(); ++i) {
        const double p = std::clamp(p1[i], eps, 1.0 - eps);
        s += -(y[i] * std::log(p) + (1 - y[i]) * std::log(1.0 - p));
    }
    return s / double(p1.size());
}

double loss(const VqcModel& m, const std::vector<std::vector<double>>& X,
            const std::vector<int>& y) {
    Evaluator ev(m);
    if (m.mode == EvalMode::exact) ev.prepare_cache(X);
    return bce_loss(ev.predict_batch(X, m.theta), y);
}

TrainRecord train(VqcModel& m, const std::vector<std::vector<double>>& X,
                  const std::vector<int>& y, const optim::MethodConfig& opt,
                  std::uint64_t run_seed) {
    if (X.empty() || X.size() != y.size()) throw std::invalid_argument("train: bad inputs");
    const auto t0 = std::chrono::steady_clock::now();

    const std::size_t dim = m.ansatz.n_parameters();
    auto rng = make_rng(run_seed, 0);
    std::uniform_real_distribution<double> uni(-std::numbers::pi, std::numbers::pi);
    Vec theta0(dim);
    for (auto& v : theta0) v = uni(rng);

    Evaluator ev(m);
    if (m.mode == EvalMode::exact) ev.prepare_cache(X);
    optim::Objective obj;
    obj.dim = int(dim);
    obj.f = [&](const Vec& th) { return bce_loss(ev.predict_batch(X, th), y); };

    TrainRecord rec;
    rec.initial_loss = obj.f(theta0);

    if (opt.budget == 0) {
        rec.loss_trace = {rec.initial_loss};
        rec.best_theta = theta0;
        rec.best_loss = rec.initial_loss;
        rec.n_evals = 1;
        m.theta = theta0;
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return rec;
    }

    optim::MethodConfig cfg = opt;
    cfg.seed = derive_seed(run_seed, 1);
    const auto res = optim::minimize(obj, theta0, cfg);

    rec.loss_trace = res.trace;
    rec.best_theta = res.best_x;
    rec.best_loss = res.best_f;
    rec.n_evals = res.n_evals + 1;
    switch (res.status) {
        case optim::OptStatus::diverged:
            rec.status = TrainStatus::diverged;
            break;
        case optim::OptStatus::line_search_failed:
            rec.status = TrainStatus::line_search_failed;
            break;
        default:
            rec.status = TrainStatus::ok;
    }
    m.theta = res.best_x;
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

} // namespace qrisk::vqc
