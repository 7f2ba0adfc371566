// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qasc/audio.hpp"
#include "qasc/linalg.hpp"
#include "qasc/qsim.hpp"

namespace qasc::qvae {

// Dense feed-forward network: rectifier after every layer except the last,
// which stays linear.
struct Mlp {
  std::vector<linalg::Matrix> weights;          // layer l: out_width x in_width
  std::vector<std::vector<double>> biases;
};

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input);

// Variational generator for log-mel patches. A classical recognizer maps a
// patch to (mean, log-variance) of a latent z; z is loaded as angle offsets
// on the first rotation layer of the encoding circuit; the measurement
// distribution of the resulting m-qubit state feeds a classical decoder that
// emits a p x p patch.
struct QvaeModel {
  int m_qubits = 3;
  int enc_layers = 2;
  int patch_size = 32;
  int latent_dim = 9;  // 3 * m_qubits first-layer angles
  qsim::Circuit enc_circuit;
  std::vector<double> theta_enc;
  Mlp decoder;     // 2^m -> hidden -> p^2
  Mlp recognizer;  // p^2 -> hidden -> 2 * latent_dim (mean, log-variance)

  // Synthesis context used when turning generated patches into waveforms.
  int n_fft = 512;
  int hop = 128;
  int sample_rate = 16000;
  int gl_iters = 200;

  bool trained = false;
  double final_loss = 0.0;
  double final_mse = 0.0;
  double final_kl = 0.0;

  void validate() const;
};

struct QvaeConfig {
  int m_qubits = 3;
  int enc_layers = 2;
  int patch_size = 32;
  int hidden = 64;

  int n_fft = 512;
  int hop = 128;
  int sample_rate = 16000;
  int gl_iters = 200;

  int epochs = 100;
  int batch_size = 8;
  double lr = 0.01;
  double beta = 1.0;  // weight of the KL term
  std::uint64_t seed = 0;
  bool verbose = false;
};

QvaeModel init_qvae(const QvaeConfig& cfg, std::uint64_t seed);

// z ~ N(0, I), reproducible per seed.
std::vector<double> sample_latent(int latent_dim, std::uint64_t seed);

// Loads z into the first rotation layer (added to theta_enc) and runs the
// encoding circuit on |0...0>. Throws on latent length mismatch.
qsim::QuantumState encode_latent(std::span<const double> z, const QvaeModel& model);

// Deterministic decoder pass; probs length must be 2^m.
audio::MelPatch decode(const qsim::OutcomeDistribution& probs, const QvaeModel& model);

enum class Provenance { Real, Synthetic };

struct AugmentedItem {
  audio::Waveform waveform;
  int label = 0;
  Provenance provenance = Provenance::Synthetic;
  std::uint64_t seed = 0;        // per-item generator seed
  bool untrained_model = false;  // warning state: generation from random weights
};

struct AugmentedDataset {
  std::vector<AugmentedItem> items;
};

// sample z -> encode -> measure -> decode -> invert to audio, n_samples
// times. Fully determined by (model, seed); n_samples = 0 yields an empty
// dataset.
AugmentedDataset generate_augmented(int n_samples, int label, const QvaeModel& model,
                                    std::uint64_t seed);

struct QvaeLossParts {
  double total = 0.0;
  double mse = 0.0;
  double kl = 0.0;
};

// Objective for one patch at fixed recognizer noise eps (length latent_dim):
// MSE(decoded, patch) + beta * KL(q(z|x) || N(0, I)).
QvaeLossParts qvae_loss(const QvaeModel& model, const audio::MelPatch& patch,
                        std::span<const double> eps, double beta);

struct QvaeGradient {
  std::vector<double> flat;  // packed like pack_qvae_params
  QvaeLossParts loss;
};

// Exact gradient: classical layers by the analytic chain rule, circuit
// parameters by the parameter-shift rule applied per outcome probability.
QvaeGradient qvae_gradient(const QvaeModel& model, const audio::MelPatch& patch,
                           std::span<const double> eps, double beta);

// Mean-latent (z = mean, no sampling) reconstruction error.
double reconstruction_mse(const QvaeModel& model, const audio::MelPatch& patch);

std::vector<double> pack_qvae_params(const QvaeModel& model);
void unpack_qvae_params(QvaeModel& model, std::span<const double> flat);

// Mini-batch Adam on the variational objective with seeded shuffling and
// seeded reparameterization noise. Throws on an empty patch list. Appends
// the mean total loss of each epoch to *epoch_losses when given.
QvaeModel train_qvae(const std::vector<audio::MelPatch>& patches, const QvaeConfig& cfg,
                     std::vector<double>* epoch_losses = nullptr);

void save_qvae(const QvaeModel& model, const std::string& path);
QvaeModel load_qvae(const std::string& path);

}  // namespace qasc::qvae
