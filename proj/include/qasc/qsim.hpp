// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace qasc::qsim {

using complexd = std::complex<double>;

// Dense statevector over n qubits: 2^n complex amplitudes.
// Qubit 0 is the least significant bit of the basis index.
struct QuantumState {
  int n_qubits = 0;
  std::vector<complexd> amplitudes;

  static QuantumState zero(int n_qubits);                        // |0...0>
  static QuantumState basis(int n_qubits, std::size_t index);    // |index>
  double norm() const;
  std::size_t dim() const { return amplitudes.size(); }
};

enum class GateKind { RX, RY, RZ, CNOT, H };

inline bool is_rotation(GateKind k) {
  return k == GateKind::RX || k == GateKind::RY || k == GateKind::RZ;
}

// Rotation convention: RX(theta) = exp(-i theta X / 2), likewise RY/RZ.
struct Gate {
  GateKind kind = GateKind::RX;
  int target = 0;
  int control = -1;      // CNOT only
  int param_index = -1;  // rotations only; index into the circuit parameter vector
};

struct Circuit {
  int n_qubits = 0;
  std::vector<Gate> gates;
  int n_params = 0;
};

// Applies a single gate. theta is ignored for CNOT/H.
void apply_gate(QuantumState& state, const Gate& gate, double theta = 0.0);

// Layered ansatz: per layer, RX/RY/RZ on every qubit (qubit-major parameter
// order), then CNOTs on adjacent pairs (no wraparound); for n_qubits >= 6 an
// extra pass of CNOTs between qubits two apart is appended per layer.
// n_params = 3 * n_qubits * n_layers.
Circuit build_qasc_circuit(int n_qubits, int n_layers);

// Runs the circuit on `initial` (defaults handled by the caller). Throws
// std::invalid_argument when params length != circuit.n_params or the state
// dimension does not match the circuit.
QuantumState run_circuit(const Circuit& circuit, std::span<const double> params,
                         const QuantumState& initial);

// Applies the adjoint U^dagger of the circuit: gates reversed, angles negated.
QuantumState run_circuit_adjoint(const Circuit& circuit, std::span<const double> params,
                                 const QuantumState& state);

complexd overlap(const QuantumState& a, const QuantumState& b);  // <a|b>
double fidelity(const QuantumState& a, const QuantumState& b);   // |<a|b>|^2

struct OutcomeDistribution {
  std::vector<double> probs;  // indexed by computational-basis outcome
};

OutcomeDistribution measure_probabilities(const QuantumState& state);

// Multinomial counts over basis outcomes; deterministic for a fixed seed.
std::vector<std::uint64_t> sample_outcomes(const QuantumState& state, std::uint64_t shots,
                                           std::uint64_t seed);

// Parameter-shift gradient of scalar_fn(U(params)|initial>):
//   grad[k] = (f(theta_k + pi/2) - f(theta_k - pi/2)) / 2.
// Exact when scalar_fn is an expectation of a diagonal observable (any linear
// functional of the measurement probabilities). Entries for parameters not
// referenced by any gate are exactly zero. The per-parameter evaluations are
// independent; `parallel` fans them out over threads without changing results.
std::vector<double> parameter_shift_gradient(
    const Circuit& circuit, std::span<const double> params,
    const std::function<double(const QuantumState&)>& scalar_fn,
    const QuantumState* initial = nullptr, bool parallel = false);

}  // namespace qasc::qsim
