// SPDX-License-Identifier: Apache-2.0
#include "qasc/qsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "qasc/rng.hpp"

namespace qasc::qsim {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

void check_qubit(const QuantumState& state, int q, const char* what) {
  if (q < 0 || q >= state.n_qubits) throw std::invalid_argument(std::string(what) + ": qubit index out of range");
}

// Applies the 2x2 matrix [[m00, m01], [m10, m11]] to the target qubit.
// Walks the statevector in blocks of 2*step so every pair (i, i+step) with
// target bit 0/1 is visited exactly once.
void apply_1q(QuantumState& state, int target, complexd m00, complexd m01, complexd m10,
              complexd m11) {
  const std::size_t step = std::size_t{1} << target;
  const std::size_t block = step << 1;
  const std::size_t dim = state.dim();
  auto* a = state.amplitudes.data();
  for (std::size_t base = 0; base < dim; base += block) {
    for (std::size_t i = base; i < base + step; ++i) {
      const complexd a0 = a[i];
      const complexd a1 = a[i + step];
      a[i] = m00 * a0 + m01 * a1;
      a[i + step] = m10 * a0 + m11 * a1;
    }
  }
}

}  // namespace

QuantumState QuantumState::zero(int n_qubits) { return basis(n_qubits, 0); }

QuantumState QuantumState::basis(int n_qubits, std::size_t index) {
  if (n_qubits < 1) throw std::invalid_argument("QuantumState: need at least one qubit");
  QuantumState s;
  s.n_qubits = n_qubits;
  s.amplitudes.assign(std::size_t{1} << n_qubits, complexd{0.0, 0.0});
  if (index >= s.amplitudes.size()) throw std::invalid_argument("QuantumState: basis index out of range");
  s.amplitudes[index] = complexd{1.0, 0.0};
  return s;
}

double QuantumState::norm() const {
  double acc = 0.0;
  for (const auto& a : amplitudes) acc += std::norm(a);
  return std::sqrt(acc);
}

void apply_gate(QuantumState& state, const Gate& gate, double theta) {
  check_qubit(state, gate.target, "apply_gate");
  const double h = theta * 0.5;
  switch (gate.kind) {
    case GateKind::RX: {
      const complexd c{std::cos(h), 0.0};
      const complexd s{0.0, -std::sin(h)};
      apply_1q(state, gate.target, c, s, s, c);
      return;
    }
    case GateKind::RY: {
      const complexd c{std::cos(h), 0.0};
      const complexd s{std::sin(h), 0.0};
      apply_1q(state, gate.target, c, -s, s, c);
      return;
    }
    case GateKind::RZ: {
      const complexd e0{std::cos(h), -std::sin(h)};
      const complexd e1{std::cos(h), std::sin(h)};
      apply_1q(state, gate.target, e0, complexd{0, 0}, complexd{0, 0}, e1);
      return;
    }
    case GateKind::H: {
      const complexd r{kInvSqrt2, 0.0};
      apply_1q(state, gate.target, r, r, r, -r);
      return;
    }
    case GateKind::CNOT: {
      check_qubit(state, gate.control, "apply_gate");
      if (gate.control == gate.target)
        throw std::invalid_argument("apply_gate: CNOT control equals target");
      const std::size_t cbit = std::size_t{1} << gate.control;
      const std::size_t tbit = std::size_t{1} << gate.target;
      auto* a = state.amplitudes.data();
      const std::size_t dim = state.dim();
      for (std::size_t i = 0; i < dim; ++i) {
        if ((i & cbit) && !(i & tbit)) std::swap(a[i], a[i | tbit]);
      }
      return;
    }
  }
  throw std::invalid_argument("apply_gate: unknown gate kind");
}

Circuit build_qasc_circuit(int n_qubits, int n_layers) {
  if (n_qubits < 1) throw std::invalid_argument("build_qasc_circuit: n_qubits must be >= 1");
  if (n_layers < 1) throw std::invalid_argument("build_qasc_circuit: n_layers must be >= 1");
  Circuit c;
  c.n_qubits = n_qubits;
  int p = 0;
  for (int layer = 0; layer < n_layers; ++layer) {
    for (int q = 0; q < n_qubits; ++q) {
      c.gates.push_back({GateKind::RX, q, -1, p++});
      c.gates.push_back({GateKind::RY, q, -1, p++});
      c.gates.push_back({GateKind::RZ, q, -1, p++});
    }
    for (int q = 0; q + 1 < n_qubits; ++q) c.gates.push_back({GateKind::CNOT, q + 1, q, -1});
    if (n_qubits >= 6) {
      for (int q = 0; q + 2 < n_qubits; ++q) c.gates.push_back({GateKind::CNOT, q + 2, q, -1});
    }
  }
  c.n_params = p;
  return c;
}

namespace {

void check_run_args(const Circuit& circuit, std::span<const double> params,
                    const QuantumState& state) {
  if (static_cast<int>(params.size()) != circuit.n_params)
    throw std::invalid_argument("run_circuit: parameter count mismatch");
  if (state.n_qubits != circuit.n_qubits || state.dim() != (std::size_t{1} << circuit.n_qubits))
    throw std::invalid_argument("run_circuit: state size does not match circuit");
}

}  // namespace

QuantumState run_circuit(const Circuit& circuit, std::span<const double> params,
                         const QuantumState& initial) {
  check_run_args(circuit, params, initial);
  QuantumState state = initial;
  for (const Gate& g : circuit.gates) {
    apply_gate(state, g, g.param_index >= 0 ? params[g.param_index] : 0.0);
  }
  return state;
}

QuantumState run_circuit_adjoint(const Circuit& circuit, std::span<const double> params,
                                 const QuantumState& state) {
  check_run_args(circuit, params, state);
  QuantumState out = state;
  for (auto it = circuit.gates.rbegin(); it != circuit.gates.rend(); ++it) {
    apply_gate(out, *it, it->param_index >= 0 ? -params[it->param_index] : 0.0);
  }
  return out;
}

complexd overlap(const QuantumState& a, const QuantumState& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("overlap: state dimensions differ");
  complexd acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.dim(); ++i) acc += std::conj(a.amplitudes[i]) * b.amplitudes[i];
  return acc;
}

double fidelity(const QuantumState& a, const QuantumState& b) { return std::norm(overlap(a, b)); }

OutcomeDistribution measure_probabilities(const QuantumState& state) {
  OutcomeDistribution d;
  d.probs.resize(state.dim());
  for (std::size_t i = 0; i < state.dim(); ++i) d.probs[i] = std::norm(state.amplitudes[i]);
  return d;
}

std::vector<std::uint64_t> sample_outcomes(const QuantumState& state, std::uint64_t shots,
                                           std::uint64_t seed) {
  if (shots == 0) throw std::invalid_argument("sample_outcomes: shots must be positive");
  const OutcomeDistribution d = measure_probabilities(state);
  std::vector<double> cdf(d.probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < d.probs.size(); ++i) {
    acc += d.probs[i];
    cdf[i] = acc;
  }
  // Guard the tail against rounding so a draw of ~1.0 always lands in range.
  cdf.back() = acc > 1.0 ? acc : 1.0;
  std::vector<std::uint64_t> counts(d.probs.size(), 0);
  util::Rng rng(seed);
  for (std::uint64_t s = 0; s < shots; ++s) {
    const double u = rng.uniform() * acc;
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    std::size_t idx = static_cast<std::size_t>(it - cdf.begin());
    if (idx >= counts.size()) idx = counts.size() - 1;
    ++counts[idx];
  }
  return counts;
}

std::vector<double> parameter_shift_gradient(
    const Circuit& circuit, std::span<const double> params,
    const std::function<double(const QuantumState&)>& scalar_fn, const QuantumState* initial,
    bool parallel) {
  const QuantumState init = initial ? *initial : QuantumState::zero(circuit.n_qubits);
  check_run_args(circuit, params, init);

  // Parameters that appear in no gate contribute exactly zero.
  std::vector<char> used(static_cast<std::size_t>(circuit.n_params), 0);
  for (const Gate& g : circuit.gates)
    if (g.param_index >= 0) used[static_cast<std::size_t>(g.param_index)] = 1;

  std::vector<double> grad(static_cast<std::size_t>(circuit.n_params), 0.0);
  auto eval_one = [&](std::size_t k) {
    if (!used[k]) return;
    std::vector<double> shifted(params.begin(), params.end());
    constexpr double kHalfPi = 1.57079632679489661923;
    shifted[k] = params[k] + kHalfPi;
    const double fp = scalar_fn(run_circuit(circuit, shifted, init));
    shifted[k] = params[k] - kHalfPi;
    const double fm = scalar_fn(run_circuit(circuit, shifted, init));
    grad[k] = 0.5 * (fp - fm);
  };

  const std::size_t n = grad.size();
  unsigned hw = std::thread::hardware_concurrency();
  if (!parallel || n < 2 || hw < 2) {
    for (std::size_t k = 0; k < n; ++k) eval_one(k);
    return grad;
  }
  const std::size_t n_threads = std::min<std::size_t>(hw, n);
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t k = t; k < n; k += n_threads) eval_one(k);
    });
  }
  for (auto& th : pool) th.join();
  return grad;
}

}  // namespace qasc::qsim
