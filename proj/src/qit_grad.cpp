// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "qasc/qit.hpp"
#include "qit_internal.hpp"

// Reverse-mode differentiation of the full pipeline. Classical pieces use the
// analytic chain rule. Each circuit application U(theta)|v> contributes
//   dL/dtheta_k = Re< g, (U(theta + pi/2 e_k) - U(theta - pi/2 e_k)) |v> > / (2*sqrt(2)),
// where g is the output cotangent; this is the parameter-shift identity lifted
// to the state level and it is exact because every parameter feeds exactly one
// rotation gate. Cotangent convention: g encodes dL = Re<g, dc> so that for a
// real-valued loss the packed result equals the true Jacobian transpose.

namespace qasc::qit {

namespace {

using qsim::complexd;
using qsim::QuantumState;

constexpr double kProbClamp = 1e-12;

QuantumState as_state(int n_qubits, std::size_t dim) {
  QuantumState s;
  s.n_qubits = n_qubits;
  s.amplitudes.assign(dim, complexd{0.0, 0.0});
  return s;
}

double re_inner(const QuantumState& g, const QuantumState& v) {
  double acc = 0.0;
  for (std::size_t a = 0; a < g.amplitudes.size(); ++a)
    acc += std::real(std::conj(g.amplitudes[a]) * v.amplitudes[a]);
  return acc;
}

// Pullback through y = v / |v|:  g_v = g_y/|v| - v * Re<g_y, v> / |v|^3.
QuantumState renorm_pullback(const QuantumState& v, double norm, const QuantumState& g_y) {
  QuantumState g_v = as_state(v.n_qubits, v.dim());
  const double radial = re_inner(g_y, v) / (norm * norm * norm);
  for (std::size_t a = 0; a < v.dim(); ++a)
    g_v.amplitudes[a] = g_y.amplitudes[a] / norm - radial * v.amplitudes[a];
  return g_v;
}

// dL/dtheta_k for every circuit parameter, given the input state and the
// output cotangent. Parameters not used by any gate stay exactly zero.
std::vector<double> circuit_param_grads(const qsim::Circuit& circuit,
                                        std::span<const double> params, const QuantumState& in,
                                        const QuantumState& g_out) {
  std::vector<bool> used(static_cast<std::size_t>(circuit.n_params), false);
  for (const auto& gate : circuit.gates)
    if (qsim::is_rotation(gate.kind)) used[static_cast<std::size_t>(gate.param_index)] = true;

  std::vector<double> shifted(params.begin(), params.end());
  std::vector<double> grads(static_cast<std::size_t>(circuit.n_params), 0.0);
  const double scale = 1.0 / (2.0 * std::numbers::sqrt2);
  for (std::size_t k = 0; k < grads.size(); ++k) {
    if (!used[k]) continue;
    shifted[k] = params[k] + std::numbers::pi / 2.0;
    const QuantumState plus = qsim::run_circuit(circuit, shifted, in);
    shifted[k] = params[k] - std::numbers::pi / 2.0;
    const QuantumState minus = qsim::run_circuit(circuit, shifted, in);
    shifted[k] = params[k];
    double acc = 0.0;
    for (std::size_t a = 0; a < plus.amplitudes.size(); ++a)
      acc += std::real(std::conj(g_out.amplitudes[a]) *
                       (plus.amplitudes[a] - minus.amplitudes[a]));
    grads[k] = acc * scale;
  }
  return grads;
}

ModelGradient make_zero_gradient(const QitModel& model) {
  ModelGradient g;
  g.proj_w = linalg::Matrix(model.projection.weights.rows, model.projection.weights.cols);
  g.proj_b.assign(model.projection.bias.size(), 0.0);
  g.theta_e.assign(model.theta_e.size(), 0.0);
  g.theta_a.assign(model.theta_a.size(), 0.0);
  g.theta_f.assign(model.theta_f.size(), 0.0);
  g.head_w = linalg::Matrix(model.head_w.rows, model.head_w.cols);
  g.head_b.assign(model.head_b.size(), 0.0);
  return g;
}

}  // namespace

ModelGradient model_gradient(const std::vector<audio::MelPatch>& patches, int label,
                             const QitModel& model) {
  if (label < 0 || label >= model.spec.n_classes)
    throw std::invalid_argument("qit: gradient label " + std::to_string(label) +
                                " out of range for " + std::to_string(model.spec.n_classes) +
                                " classes");

  detail::ForwardCache fc;
  detail::forward_impl(patches, model, &fc);

  ModelGradient grad = make_zero_gradient(model);
  const double y_true = fc.probabilities[static_cast<std::size_t>(label)];
  grad.loss = -std::log(std::max(y_true, kProbClamp));
  // Inside the clamp the loss is constant, so the exact gradient is zero.
  if (y_true < kProbClamp) return grad;

  const std::size_t n = patches.size();
  const auto c = static_cast<std::size_t>(model.spec.n_classes);
  const std::size_t dim = std::size_t{1} << model.spec.n_qubits;

  // Cross-entropy through softmax, then the linear head.
  std::vector<double> dlogits(fc.probabilities);
  dlogits[static_cast<std::size_t>(label)] -= 1.0;
  std::vector<double> dz(c, 0.0);
  for (std::size_t r = 0; r < c; ++r) {
    grad.head_b[r] = dlogits[r];
    for (std::size_t k = 0; k < c; ++k) {
      grad.head_w.at(r, k) = dlogits[r] * fc.z[k];
      dz[k] += dlogits[r] * model.head_w.at(r, k);
    }
  }

  // Pooling routes each class column to one patch (max) or all patches (mean).
  linalg::Matrix dprob(n, c);
  if (model.spec.pooling == PoolingMode::Mean) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < c; ++k) dprob.at(i, k) = dz[k] / static_cast<double>(n);
  } else {
    for (std::size_t k = 0; k < c; ++k) dprob.at(fc.max_rows[k], k) = dz[k];
  }

  // p_a = |c_a|^2  =>  g_c[a] = 2 * dp_a * c_a (entries beyond n_classes are unused).
  const std::vector<QuantumState>& final_states = fc.layers.back().out;
  std::vector<QuantumState> gs(n);
  for (std::size_t i = 0; i < n; ++i) {
    gs[i] = as_state(model.spec.n_qubits, dim);
    for (std::size_t k = 0; k < c; ++k)
      gs[i].amplitudes[k] = 2.0 * dprob.at(i, k) * final_states[i].amplitudes[k];
  }

  std::vector<QuantumState> encoded_states;
  encoded_states.reserve(n);
  for (const auto& e : fc.enc) encoded_states.push_back(e.encoded);

  for (int layer = model.spec.n_layers - 1; layer >= 0; --layer) {
    const detail::LayerCache& lc = fc.layers[static_cast<std::size_t>(layer)];
    const std::vector<QuantumState>& states_in =
        layer == 0 ? encoded_states : fc.layers[static_cast<std::size_t>(layer) - 1].out;

    const auto f_params = model.ffn_params(layer);
    const auto a_params = model.attn_params(layer);
    const std::size_t f_base =
        static_cast<std::size_t>(layer) * static_cast<std::size_t>(model.ffn_circuit.n_params);
    const std::size_t a_base =
        static_cast<std::size_t>(layer) * static_cast<std::size_t>(model.attn_circuit.n_params);

    // Feed-forward block: renormalization, then U_f.
    std::vector<QuantumState> g_attended(n);
    for (std::size_t i = 0; i < n; ++i) {
      const QuantumState g_ffn = renorm_pullback(lc.ffn_out[i], lc.ffn_norm[i], gs[i]);
      const std::vector<double> dth =
          circuit_param_grads(model.ffn_circuit, f_params, lc.attended[i], g_ffn);
      for (std::size_t k = 0; k < dth.size(); ++k) grad.theta_f[f_base + k] += dth[k];
      g_attended[i] = qsim::run_circuit_adjoint(model.ffn_circuit, f_params, g_ffn);
    }

    // Attention renormalization and the weighted sum u_i = sum_j w_ij t_j.
    std::vector<QuantumState> g_t(n);
    for (std::size_t j = 0; j < n; ++j) g_t[j] = as_state(model.spec.n_qubits, dim);
    linalg::Matrix dweights(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      const QuantumState g_u = renorm_pullback(lc.summed[i], lc.summed_norm[i], g_attended[i]);
      for (std::size_t j = 0; j < n; ++j) {
        const double w = lc.weights[i * n + j];
        dweights.at(i, j) = re_inner(g_u, lc.transformed[j]);
        for (std::size_t a = 0; a < dim; ++a)
          g_t[j].amplitudes[a] += w * g_u.amplitudes[a];
      }
    }

    // Row normalization w_ij = alpha_ij / r_i.
    linalg::Matrix dscores(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      double mixed = 0.0;
      for (std::size_t j = 0; j < n; ++j) mixed += dweights.at(i, j) * lc.weights[i * n + j];
      for (std::size_t j = 0; j < n; ++j)
        dscores.at(i, j) = (dweights.at(i, j) - mixed) / lc.row_sum[i];
    }

    // U_a: parameter gradients plus the cotangent carried back to its input.
    std::vector<QuantumState> g_in(n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::vector<double> dth =
          circuit_param_grads(model.attn_circuit, a_params, states_in[j], g_t[j]);
      for (std::size_t k = 0; k < dth.size(); ++k) grad.theta_a[a_base + k] += dth[k];
      g_in[j] = qsim::run_circuit_adjoint(model.attn_circuit, a_params, g_t[j]);
    }

    // Fidelity scores alpha_ij = |<s_i|s_j>|^2:
    //   g_{s_j} += 2 dalpha_ij o_ij s_i,   g_{s_i} += 2 dalpha_ij conj(o_ij) s_j.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double da = dscores.at(i, j);
        if (da == 0.0) continue;
        const complexd o = lc.overlaps[i * n + j];
        for (std::size_t a = 0; a < dim; ++a) {
          g_in[j].amplitudes[a] += 2.0 * da * o * states_in[i].amplitudes[a];
          g_in[i].amplitudes[a] += 2.0 * da * std::conj(o) * states_in[j].amplitudes[a];
        }
      }

    gs = std::move(g_in);
  }

  // Embedding circuit and the patch projection.
  const std::size_t angle_dim = static_cast<std::size_t>(3) * model.spec.n_qubits;
  for (std::size_t i = 0; i < n; ++i) {
    const detail::EncodeCache& enc = fc.enc[i];
    const std::vector<double> dth =
        circuit_param_grads(model.embed_circuit, enc.embed_params, enc.initial, gs[i]);
    for (std::size_t k = 0; k < dth.size(); ++k) grad.theta_e[k] += dth[k];

    std::vector<double> g_proj;
    if (model.spec.encoding == EncodingMode::Angle) {
      // Effective first-block angles are theta_e[k] + proj[k].
      g_proj.assign(dth.begin(), dth.begin() + static_cast<std::ptrdiff_t>(angle_dim));
    } else if (!enc.fallback) {
      const QuantumState g_init =
          qsim::run_circuit_adjoint(model.embed_circuit, enc.embed_params, gs[i]);
      // The initial amplitudes are the normalized (real) projection.
      std::vector<double> g_unit(enc.proj.size());
      for (std::size_t a = 0; a < g_unit.size(); ++a)
        g_unit[a] = std::real(g_init.amplitudes[a]);
      double radial = 0.0;
      for (std::size_t a = 0; a < g_unit.size(); ++a) radial += g_unit[a] * enc.proj[a];
      radial /= enc.norm * enc.norm * enc.norm;
      g_proj.resize(enc.proj.size());
      for (std::size_t a = 0; a < g_proj.size(); ++a)
        g_proj[a] = g_unit[a] / enc.norm - radial * enc.proj[a];
    } else {
      // Degenerate patch fell back to |0...0>; the projection has no effect.
      continue;
    }

    const auto& x = patches[i].values;
    for (std::size_t k = 0; k < g_proj.size(); ++k) {
      grad.proj_b[k] += g_proj[k];
      for (std::size_t r = 0; r < x.size(); ++r) grad.proj_w.at(r, k) += x[r] * g_proj[k];
    }
  }

  return grad;
}

}  // namespace qasc::qit
