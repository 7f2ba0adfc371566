// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "qasc/qit.hpp"
#include "qasc/qsim.hpp"

namespace qasc::qit::detail {

struct EncodeCache {
  std::vector<double> proj;          // projection output (pre-normalization)
  double norm = 0.0;                 // amplitude mode: norm of proj
  bool fallback = false;             // amplitude mode: degenerate patch -> |0...0>
  std::vector<double> embed_params;  // effective embedding parameters
  qsim::QuantumState initial;
  qsim::QuantumState encoded;
};

struct LayerCache {
  std::vector<qsim::complexd> overlaps;         // n x n, o_ij = <psi_i|psi_j>
  AttentionMatrix scores;                       // alpha_ij = |o_ij|^2
  std::vector<double> row_sum;                  // r_i
  std::vector<double> weights;                  // n x n, w_ij = alpha_ij / r_i
  std::vector<qsim::QuantumState> transformed;  // t_j = U_a |psi_j>
  std::vector<qsim::QuantumState> summed;       // u_i = sum_j w_ij t_j
  std::vector<double> summed_norm;
  std::vector<qsim::QuantumState> attended;     // u_i / |u_i|
  std::vector<qsim::QuantumState> ffn_out;      // U_f applied, pre-renormalization
  std::vector<double> ffn_norm;
  std::vector<qsim::QuantumState> out;
};

struct ForwardCache {
  std::vector<EncodeCache> enc;
  std::vector<LayerCache> layers;
  std::vector<qsim::OutcomeDistribution> dists;
  std::vector<double> z;
  std::vector<std::size_t> max_rows;  // Max pooling: winning patch per class column
  std::vector<double> logits;
  std::vector<double> probabilities;
  int label = -1;
};

// Shared by forward() and model_gradient(); cache may be null.
ForwardResult forward_impl(const std::vector<audio::MelPatch>& patches, const QitModel& model,
                           ForwardCache* cache);

EncodeCache encode_patch_impl(const audio::MelPatch& patch, const QitModel& model);

}  // namespace qasc::qit::detail
