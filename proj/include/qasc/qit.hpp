// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qasc/audio.hpp"
#include "qasc/linalg.hpp"
#include "qasc/qsim.hpp"

namespace qasc::qit {

enum class EncodingMode { Amplitude, Angle };
enum class PoolingMode { Mean, Max };

struct ModelSpec {
  int n_qubits = 4;
  int n_layers = 3;
  EncodingMode encoding = EncodingMode::Amplitude;
  PoolingMode pooling = PoolingMode::Max;
  int n_classes = 2;
  int patch_size = 32;
};

// Trainable linear map from a flattened p*p patch to the encoder input
// (2^n amplitudes for amplitude encoding, 3n angles for angle encoding).
struct PatchProjection {
  linalg::Matrix weights;    // d_in x d_out
  std::vector<double> bias;  // d_out
};

// Quantum-inspired transformer classifier. One embedding circuit of
// n_layers blocks encodes each patch; every encoder layer then applies
// fidelity-weighted attention with its own parameter slice of a shared
// one-block circuit, a one-block feed-forward circuit, and a state
// renormalization standing in for layer norm. Measurement probabilities,
// truncated to the first n_classes outcomes and pooled over patches, feed a
// linear classification head.
struct QitModel {
  ModelSpec spec;
  PatchProjection projection;
  qsim::Circuit embed_circuit;  // depth = n_layers
  qsim::Circuit attn_circuit;   // one block; per-layer parameter slices in theta_a
  qsim::Circuit ffn_circuit;    // one block; per-layer parameter slices in theta_f
  std::vector<double> theta_e;  // embed_circuit.n_params
  std::vector<double> theta_a;  // n_layers * attn_circuit.n_params
  std::vector<double> theta_f;  // n_layers * ffn_circuit.n_params
  linalg::Matrix head_w;        // C x C
  std::vector<double> head_b;   // C

  std::span<const double> attn_params(int layer) const;
  std::span<const double> ffn_params(int layer) const;
  // Throws std::invalid_argument when any arity invariant is broken.
  void validate() const;
};

// Gaussian weights (stdev 0.1), zero biases, angles uniform in (-0.1, 0.1);
// all draws seeded. Throws when n_classes exceeds 2^n_qubits.
QitModel init_model(const ModelSpec& spec, std::uint64_t seed);

struct AttentionMatrix {
  std::size_t n = 0;
  std::vector<double> values;  // row-major n x n

  double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

struct PooledFeatures {
  std::vector<double> z;  // length n_classes
};

struct Classification {
  std::vector<double> probabilities;
  int label = -1;  // argmax, lowest index on ties
};

// Projects, optionally amplitude-normalizes (|0...0> fallback below 1e-12),
// and runs the embedding circuit. Angle mode adds the projected angles onto
// the first rotation block's parameters.
qsim::QuantumState encode_patch(const audio::MelPatch& patch, const QitModel& model);

// A[i][j] = |<psi_i|psi_j>|^2.
AttentionMatrix attention_scores(const std::vector<qsim::QuantumState>& states);

// psi'_i = normalize( sum_j (A[i][j]/sum_k A[i][k]) * U_a |psi_j> ).
std::vector<qsim::QuantumState> attend(const std::vector<qsim::QuantumState>& states,
                                       const AttentionMatrix& scores, const QitModel& model,
                                       int layer = 0);

qsim::QuantumState feedforward(const qsim::QuantumState& state, const QitModel& model,
                               int layer = 0);

// Truncates each distribution to its first n_classes entries and pools
// across patches (mean, or per-column max).
PooledFeatures pool(const std::vector<qsim::OutcomeDistribution>& dists, const QitModel& model);

Classification classify(const PooledFeatures& features, const QitModel& model);

struct ForwardTrace {
  std::vector<qsim::QuantumState> encoded;
  std::vector<AttentionMatrix> attention;                   // per layer
  std::vector<std::vector<qsim::QuantumState>> layer_out;   // per layer, per patch
  std::vector<qsim::OutcomeDistribution> distributions;     // per patch
  PooledFeatures pooled;
  std::vector<double> logits;
};

struct ForwardResult {
  std::vector<double> probabilities;
  int label = -1;
  ForwardTrace trace;
};

ForwardResult forward(const std::vector<audio::MelPatch>& patches, const QitModel& model);

struct ModelGradient {
  linalg::Matrix proj_w;
  std::vector<double> proj_b;
  std::vector<double> theta_e;
  std::vector<double> theta_a;
  std::vector<double> theta_f;
  linalg::Matrix head_w;
  std::vector<double> head_b;
  double loss = 0.0;
};

// Gradient of the cross-entropy loss for one sample. Classical parameters
// (projection, head) by the analytic chain rule; circuit parameters by the
// parameter-shift identity applied at each circuit application,
//   dU/dtheta_k |v> = (U(theta_k + pi/2) - U(theta_k - pi/2)) |v> / (2*sqrt(2)),
// combined with the same chain rule, so every entry is the exact derivative.
ModelGradient model_gradient(const std::vector<audio::MelPatch>& patches, int label,
                             const QitModel& model);

// Flat parameter packing (projection, theta_e, theta_a, theta_f, head), used
// by the optimizer. Gradients pack in the same order.
std::vector<double> pack_params(const QitModel& model);
void unpack_params(QitModel& model, std::span<const double> flat);
std::vector<double> pack_gradient(const ModelGradient& grad);

void save_checkpoint(const QitModel& model, const std::string& path);
QitModel load_checkpoint(const std::string& path);

}  // namespace qasc::qit
