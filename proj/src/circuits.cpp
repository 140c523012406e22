#include "qrisk/circuits.hpp"

#include <stdexcept>
#include <string>

namespace qrisk::circuits {

using qsim::Circuit;
using qsim::Gate;
using qsim::GateKind;
using qsim::ParamSlot;

std::size_t AnsatzSpec::n_parameters() const {
    const std::size_t per_layer =
        (family == AnsatzFamily::efficient_su2 ? 2 : 1) * std::size_t(n_qubits);
    return per_layer * std::size_t(reps + 1);
}

qsim::Circuit build_feature_map(const FeatureMapSpec& spec) {
    if (spec.n_features < 1) throw std::invalid_argument("feature map: n_features < 1");
    if (spec.reps < 1) throw std::invalid_argument("feature map: reps < 1");
    Circuit c;
    c.n_qubits = spec.n_features;
    const bool shifted = spec.convention == PairPhase::pi_shifted_product;
    for (int rep = 0; rep < spec.reps; ++rep) {
        for (int q = 0; q < c.n_qubits; ++q) c.push(Gate::h(q));
        for (int q = 0; q < c.n_qubits; ++q) {
            ParamSlot s;
            s.kind = ParamSlot::Kind::feature;
            s.index = q;
            s.name = "x" + std::to_string(q);
            c.push_slotted(Gate::p(q, 0.0), s);
        }
        for (int i = 0; i < c.n_qubits; ++i) {
            for (int j = i + 1; j < c.n_qubits; ++j) {
                c.push(Gate::cnot(i, j));
                ParamSlot s;
                s.kind = ParamSlot::Kind::feature_pair;
                s.index = i;
                s.index2 = j;
                s.pi_shifted = shifted;
                s.name = "x" + std::to_string(i) + "*x" + std::to_string(j);
                c.push_slotted(Gate::p(j, 0.0), s);
                c.push(Gate::cnot(i, j));
            }
        }
    }
    return c;
}

namespace {

void rotation_layer(Circuit& c, const AnsatzSpec& spec, int& next_theta) {
    // real_amplitudes always rotates about Y; the rotation pair only applies
    // to efficient_su2.
    const bool two_axis = spec.family == AnsatzFamily::efficient_su2;
    const GateKind first = !two_axis                                ? GateKind::RY
                           : spec.rotations == RotationPair::ry_rz ? GateKind::RY
                                                                   : GateKind::RX;
    const GateKind second = spec.rotations == RotationPair::ry_rz ? GateKind::RZ : GateKind::RY;
    for (int q = 0; q < spec.n_qubits; ++q) {
        const int n_axes = two_axis ? 2 : 1;
        for (int axis = 0; axis < n_axes; ++axis) {
            ParamSlot s;
            s.kind = ParamSlot::Kind::theta;
            s.index = next_theta++;
            s.name = "t" + std::to_string(s.index);
            Gate g;
            g.kind = axis == 0 ? first : second;
            g.target = q;
            c.push_slotted(g, s);
        }
    }
}

} // namespace

qsim::Circuit build_ansatz(const AnsatzSpec& spec) {
    if (spec.n_qubits < 1) throw std::invalid_argument("ansatz: n_qubits < 1");
    if (spec.reps < 0) throw std::invalid_argument("ansatz: reps < 0");
    Circuit c;
    c.n_qubits = spec.n_qubits;
    int next_theta = 0;
    rotation_layer(c, spec, next_theta);
    for (int rep = 0; rep < spec.reps; ++rep) {
        for (int q = 0; q + 1 < spec.n_qubits; ++q) c.push(Gate::cnot(q, q + 1));
        rotation_layer(c, spec, next_theta);
    }
    return c;
}

} // namespace qrisk::circuits
