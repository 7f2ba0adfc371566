// SPDX-License-Identifier: Apache-2.0
#include "qasc/qvae.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qasc/rng.hpp"
#include "qasc/tensor_io.hpp"

namespace qasc::qvae {

namespace {

constexpr const char* kCheckpointMagic = "QVAE";

void check_mlp(const Mlp& net, std::size_t in_width, std::size_t out_width, const char* name) {
  if (net.weights.empty() || net.weights.size() != net.biases.size())
    throw std::invalid_argument(std::string("qvae: ") + name + " network is malformed");
  if (net.weights.front().cols != in_width)
    throw std::invalid_argument(std::string("qvae: ") + name + " input width mismatch");
  if (net.weights.back().rows != out_width)
    throw std::invalid_argument(std::string("qvae: ") + name + " output width mismatch");
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    if (net.biases[l].size() != net.weights[l].rows)
      throw std::invalid_argument(std::string("qvae: ") + name + " bias width mismatch");
    if (l > 0 && net.weights[l].cols != net.weights[l - 1].rows)
      throw std::invalid_argument(std::string("qvae: ") + name + " layer widths do not chain");
  }
}

// acts[0] = input, acts[l+1] = output of layer l (rectified except the last).
std::vector<std::vector<double>> mlp_forward_acts(const Mlp& net, std::span<const double> input) {
  std::vector<std::vector<double>> acts;
  acts.emplace_back(input.begin(), input.end());
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    std::vector<double> out = linalg::matvec(net.weights[l], acts.back());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += net.biases[l][i];
    if (l + 1 < net.weights.size())
      for (double& v : out) v = std::max(v, 0.0);
    acts.push_back(std::move(out));
  }
  return acts;
}

struct MlpGrads {
  std::vector<linalg::Matrix> w;
  std::vector<std::vector<double>> b;
};

MlpGrads zero_grads(const Mlp& net) {
  MlpGrads g;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    g.w.emplace_back(net.weights[l].rows, net.weights[l].cols);
    g.b.emplace_back(net.weights[l].rows, 0.0);
  }
  return g;
}

// Returns the gradient with respect to the network input.
std::vector<double> mlp_backward(const Mlp& net, const std::vector<std::vector<double>>& acts,
                                 std::vector<double> dout, MlpGrads& grads) {
  for (std::size_t li = net.weights.size(); li-- > 0;) {
    if (li + 1 < net.weights.size()) {
      // Rectifier mask of this layer's output.
      const std::vector<double>& post = acts[li + 1];
      for (std::size_t i = 0; i < dout.size(); ++i)
        if (post[i] <= 0.0) dout[i] = 0.0;
    }
    const std::vector<double>& in = acts[li];
    for (std::size_t r = 0; r < net.weights[li].rows; ++r) {
      grads.b[li][r] += dout[r];
      for (std::size_t c = 0; c < net.weights[li].cols; ++c)
        grads.w[li].at(r, c) += dout[r] * in[c];
    }
    dout = linalg::matvec_t(net.weights[li], dout);
  }
  return dout;
}

void init_mlp(Mlp& net, const std::vector<std::size_t>& widths, util::Rng& rng) {
  net.weights.clear();
  net.biases.clear();
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    linalg::Matrix w(widths[l + 1], widths[l]);
    for (double& v : w.data) v = 0.1 * rng.gaussian();
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(widths[l + 1], 0.0);
  }
}

struct ForwardCache {
  std::vector<std::vector<double>> rec_acts;
  std::vector<double> mu;
  std::vector<double> lv;
  std::vector<double> z;
  std::vector<double> effective;
  std::vector<double> q;
  std::vector<std::vector<double>> dec_acts;
};

QvaeLossParts forward_objective(const QvaeModel& model, const audio::MelPatch& patch,
                                std::span<const double> eps, double beta, ForwardCache* cache) {
  model.validate();
  const std::size_t d_in = static_cast<std::size_t>(model.patch_size) * model.patch_size;
  if (patch.values.size() != d_in)
    throw std::invalid_argument("qvae: patch size does not match the model");
  if (eps.size() != static_cast<std::size_t>(model.latent_dim))
    throw std::invalid_argument("qvae: noise vector length must equal latent_dim");
  if (beta < 0.0) throw std::invalid_argument("qvae: beta must be non-negative");

  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;

  fc.rec_acts = mlp_forward_acts(model.recognizer, patch.values);
  const std::vector<double>& rec_out = fc.rec_acts.back();
  const auto latent = static_cast<std::size_t>(model.latent_dim);
  fc.mu.assign(rec_out.begin(), rec_out.begin() + static_cast<std::ptrdiff_t>(latent));
  fc.lv.assign(rec_out.begin() + static_cast<std::ptrdiff_t>(latent), rec_out.end());

  fc.z.resize(latent);
  for (std::size_t j = 0; j < latent; ++j)
    fc.z[j] = fc.mu[j] + std::exp(0.5 * fc.lv[j]) * eps[j];

  fc.effective.assign(model.theta_enc.begin(), model.theta_enc.end());
  for (std::size_t j = 0; j < latent; ++j) fc.effective[j] += fc.z[j];
  const qsim::QuantumState psi = qsim::run_circuit(
      model.enc_circuit, fc.effective, qsim::QuantumState::zero(model.m_qubits));
  fc.q = qsim::measure_probabilities(psi).probs;

  fc.dec_acts = mlp_forward_acts(model.decoder, fc.q);
  const std::vector<double>& xhat = fc.dec_acts.back();

  QvaeLossParts parts;
  for (std::size_t i = 0; i < d_in; ++i) {
    const double d = xhat[i] - patch.values[i];
    parts.mse += d * d;
  }
  parts.mse /= static_cast<double>(d_in);
  for (std::size_t j = 0; j < latent; ++j)
    parts.kl += 0.5 * (fc.mu[j] * fc.mu[j] + std::exp(fc.lv[j]) - 1.0 - fc.lv[j]);
  parts.total = parts.mse + beta * parts.kl;
  return parts;
}

// dL/d(effective_k) by the per-outcome parameter-shift rule; every outcome
// probability is an expectation of a basis projector, so each partial is
// exact: dq_a/dtheta_k = (q_a(+pi/2) - q_a(-pi/2)) / 2.
std::vector<double> circuit_prob_grads(const qsim::Circuit& circuit,
                                       std::span<const double> effective,
                                       std::span<const double> dq, int m_qubits) {
  std::vector<double> shifted(effective.begin(), effective.end());
  std::vector<double> grads(effective.size(), 0.0);
  const qsim::QuantumState zero = qsim::QuantumState::zero(m_qubits);
  for (std::size_t k = 0; k < grads.size(); ++k) {
    shifted[k] = effective[k] + std::numbers::pi / 2.0;
    const auto plus = qsim::measure_probabilities(qsim::run_circuit(circuit, shifted, zero));
    shifted[k] = effective[k] - std::numbers::pi / 2.0;
    const auto minus = qsim::measure_probabilities(qsim::run_circuit(circuit, shifted, zero));
    shifted[k] = effective[k];
    double acc = 0.0;
    for (std::size_t a = 0; a < dq.size(); ++a)
      acc += dq[a] * (plus.probs[a] - minus.probs[a]);
    grads[k] = 0.5 * acc;
  }
  return grads;
}

void append_mlp_params(const Mlp& net, std::vector<double>& flat) {
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    flat.insert(flat.end(), net.weights[l].data.begin(), net.weights[l].data.end());
    flat.insert(flat.end(), net.biases[l].begin(), net.biases[l].end());
  }
}

void append_mlp_grads(const MlpGrads& grads, std::vector<double>& flat) {
  for (std::size_t l = 0; l < grads.w.size(); ++l) {
    flat.insert(flat.end(), grads.w[l].data.begin(), grads.w[l].data.end());
    flat.insert(flat.end(), grads.b[l].begin(), grads.b[l].end());
  }
}

}  // namespace

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input) {
  if (net.weights.empty()) throw std::invalid_argument("qvae: empty network");
  if (input.size() != net.weights.front().cols)
    throw std::invalid_argument("qvae: network input width mismatch");
  return mlp_forward_acts(net, input).back();
}

void QvaeModel::validate() const {
  if (m_qubits < 1) throw std::invalid_argument("qvae: m_qubits must be positive");
  if (latent_dim != 3 * m_qubits)
    throw std::invalid_argument("qvae: latent_dim must equal the 3*m first-layer angles");
  if (enc_circuit.n_qubits != m_qubits)
    throw std::invalid_argument("qvae: encoding circuit qubit count mismatch");
  if (theta_enc.size() != static_cast<std::size_t>(enc_circuit.n_params))
    throw std::invalid_argument("qvae: theta_enc length mismatch");
  if (enc_circuit.n_params < latent_dim)
    throw std::invalid_argument("qvae: encoding circuit has fewer angles than latent_dim");
  const std::size_t dim = std::size_t{1} << m_qubits;
  const std::size_t d_patch = static_cast<std::size_t>(patch_size) * patch_size;
  check_mlp(decoder, dim, d_patch, "decoder");
  check_mlp(recognizer, d_patch, 2 * static_cast<std::size_t>(latent_dim), "recognizer");
}

QvaeModel init_qvae(const QvaeConfig& cfg, std::uint64_t seed) {
  if (cfg.m_qubits < 1 || cfg.enc_layers < 1)
    throw std::invalid_argument("qvae: m_qubits and enc_layers must be positive");
  if (cfg.patch_size < 2) throw std::invalid_argument("qvae: patch_size must be at least 2");
  if (cfg.hidden < 1) throw std::invalid_argument("qvae: hidden width must be positive");

  QvaeModel model;
  model.m_qubits = cfg.m_qubits;
  model.enc_layers = cfg.enc_layers;
  model.patch_size = cfg.patch_size;
  model.latent_dim = 3 * cfg.m_qubits;
  model.enc_circuit = qsim::build_qasc_circuit(cfg.m_qubits, cfg.enc_layers);
  model.n_fft = cfg.n_fft;
  model.hop = cfg.hop;
  model.sample_rate = cfg.sample_rate;
  model.gl_iters = cfg.gl_iters;

  util::Rng rng(seed);
  model.theta_enc.resize(static_cast<std::size_t>(model.enc_circuit.n_params));
  for (double& t : model.theta_enc) t = rng.uniform(-0.1, 0.1);

  const std::size_t dim = std::size_t{1} << cfg.m_qubits;
  const std::size_t d_patch = static_cast<std::size_t>(cfg.patch_size) * cfg.patch_size;
  init_mlp(model.decoder, {dim, static_cast<std::size_t>(cfg.hidden), d_patch}, rng);
  init_mlp(model.recognizer,
           {d_patch, static_cast<std::size_t>(cfg.hidden),
            2 * static_cast<std::size_t>(model.latent_dim)},
           rng);
  model.validate();
  return model;
}

std::vector<double> sample_latent(int latent_dim, std::uint64_t seed) {
  if (latent_dim < 1) throw std::invalid_argument("qvae: latent_dim must be positive");
  util::Rng rng(seed);
  std::vector<double> z(static_cast<std::size_t>(latent_dim));
  for (double& v : z) v = rng.gaussian();
  return z;
}

qsim::QuantumState encode_latent(std::span<const double> z, const QvaeModel& model) {
  model.validate();
  if (z.size() != static_cast<std::size_t>(model.latent_dim))
    throw std::invalid_argument("qvae: latent vector length " + std::to_string(z.size()) +
                                " does not match latent_dim " +
                                std::to_string(model.latent_dim));
  std::vector<double> effective(model.theta_enc);
  for (std::size_t j = 0; j < z.size(); ++j) effective[j] += z[j];
  return qsim::run_circuit(model.enc_circuit, effective,
                           qsim::QuantumState::zero(model.m_qubits));
}

audio::MelPatch decode(const qsim::OutcomeDistribution& probs, const QvaeModel& model) {
  model.validate();
  if (probs.probs.size() != (std::size_t{1} << model.m_qubits))
    throw std::invalid_argument("qvae: distribution width does not match the decoder");
  audio::MelPatch patch;
  patch.size = model.patch_size;
  patch.values = mlp_forward(model.decoder, probs.probs);
  return patch;
}

AugmentedDataset generate_augmented(int n_samples, int label, const QvaeModel& model,
                                    std::uint64_t seed) {
  if (n_samples < 0) throw std::invalid_argument("qvae: n_samples must be non-negative");
  if (label < 0) throw std::invalid_argument("qvae: label must be non-negative");
  model.validate();

  AugmentedDataset out;
  if (n_samples == 0) return out;
  const linalg::Matrix fb =
      audio::mel_filterbank(model.n_fft, model.patch_size, model.sample_rate);
  for (int i = 0; i < n_samples; ++i) {
    const std::uint64_t item_seed = util::hash_combine(seed, static_cast<std::uint64_t>(i));
    const std::vector<double> z =
        sample_latent(model.latent_dim, util::hash_combine(item_seed, 1));
    const qsim::QuantumState psi = encode_latent(z, model);
    const qsim::OutcomeDistribution probs = qsim::measure_probabilities(psi);
    const audio::MelPatch patch = decode(probs, model);

    AugmentedItem item;
    item.waveform = audio::invert_mel_patch(patch, fb, model.hop, model.sample_rate,
                                            model.gl_iters, util::hash_combine(item_seed, 2));
    item.label = label;
    item.provenance = Provenance::Synthetic;
    item.seed = item_seed;
    item.untrained_model = !model.trained;
    out.items.push_back(std::move(item));
  }
  return out;
}

QvaeLossParts qvae_loss(const QvaeModel& model, const audio::MelPatch& patch,
                        std::span<const double> eps, double beta) {
  return forward_objective(model, patch, eps, beta, nullptr);
}

QvaeGradient qvae_gradient(const QvaeModel& model, const audio::MelPatch& patch,
                           std::span<const double> eps, double beta) {
  ForwardCache fc;
  QvaeGradient result;
  result.loss = forward_objective(model, patch, eps, beta, &fc);

  const auto latent = static_cast<std::size_t>(model.latent_dim);
  const std::size_t d_in = static_cast<std::size_t>(model.patch_size) * model.patch_size;

  // MSE through the decoder.
  const std::vector<double>& xhat = fc.dec_acts.back();
  std::vector<double> dxhat(d_in);
  for (std::size_t i = 0; i < d_in; ++i)
    dxhat[i] = 2.0 * (xhat[i] - patch.values[i]) / static_cast<double>(d_in);
  MlpGrads dec_grads = zero_grads(model.decoder);
  const std::vector<double> dq = mlp_backward(model.decoder, fc.dec_acts, dxhat, dec_grads);

  // Outcome probabilities through the circuit; the first latent_dim entries
  // of the effective angles carry z.
  const std::vector<double> deff =
      circuit_prob_grads(model.enc_circuit, fc.effective, dq, model.m_qubits);
  std::vector<double> dtheta(deff);
  std::vector<double> dmu(latent), dlv(latent);
  for (std::size_t j = 0; j < latent; ++j) {
    const double dz = deff[j];
    dmu[j] = dz + beta * fc.mu[j];
    dlv[j] = dz * eps[j] * 0.5 * std::exp(0.5 * fc.lv[j]) +
             beta * 0.5 * (std::exp(fc.lv[j]) - 1.0);
  }

  MlpGrads rec_grads = zero_grads(model.recognizer);
  std::vector<double> drec(2 * latent);
  std::copy(dmu.begin(), dmu.end(), drec.begin());
  std::copy(dlv.begin(), dlv.end(), drec.begin() + static_cast<std::ptrdiff_t>(latent));
  mlp_backward(model.recognizer, fc.rec_acts, drec, rec_grads);

  result.flat.reserve(pack_qvae_params(model).size());
  result.flat.insert(result.flat.end(), dtheta.begin(), dtheta.end());
  append_mlp_grads(dec_grads, result.flat);
  append_mlp_grads(rec_grads, result.flat);
  return result;
}

double reconstruction_mse(const QvaeModel& model, const audio::MelPatch& patch) {
  const std::vector<double> eps(static_cast<std::size_t>(model.latent_dim), 0.0);
  return forward_objective(model, patch, eps, 0.0, nullptr).mse;
}

std::vector<double> pack_qvae_params(const QvaeModel& model) {
  std::vector<double> flat;
  flat.insert(flat.end(), model.theta_enc.begin(), model.theta_enc.end());
  append_mlp_params(model.decoder, flat);
  append_mlp_params(model.recognizer, flat);
  return flat;
}

void unpack_qvae_params(QvaeModel& model, std::span<const double> flat) {
  std::size_t offset = 0;
  auto take = [&](double* dst, std::size_t count) {
    if (offset + count > flat.size())
      throw std::invalid_argument("qvae: packed parameter vector is too short");
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.begin() + static_cast<std::ptrdiff_t>(offset + count), dst);
    offset += count;
  };
  take(model.theta_enc.data(), model.theta_enc.size());
  for (Mlp* net : {&model.decoder, &model.recognizer})
    for (std::size_t l = 0; l < net->weights.size(); ++l) {
      take(net->weights[l].data.data(), net->weights[l].data.size());
      take(net->biases[l].data(), net->biases[l].size());
    }
  if (offset != flat.size())
    throw std::invalid_argument("qvae: packed parameter vector is too long");
}

QvaeModel train_qvae(const std::vector<audio::MelPatch>& patches, const QvaeConfig& cfg,
                     std::vector<double>* epoch_losses) {
  if (patches.empty()) throw std::invalid_argument("qvae: training needs at least one patch");
  if (cfg.epochs < 1 || cfg.batch_size < 1)
    throw std::invalid_argument("qvae: epochs and batch_size must be positive");
  const std::size_t d_in = static_cast<std::size_t>(cfg.patch_size) * cfg.patch_size;
  for (const auto& p : patches)
    if (p.values.size() != d_in)
      throw std::invalid_argument("qvae: training patch size does not match the config");

  QvaeModel model = init_qvae(cfg, util::hash_combine(cfg.seed, 1));

  struct Adam {
    double lr;
    std::int64_t step = 0;
    std::vector<double> m, v;
  } adam{cfg.lr, 0, {}, {}};

  std::vector<std::size_t> order(patches.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double mse_sum = 0.0, kl_sum = 0.0, loss_sum = 0.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    util::Rng shuffle_rng(
        util::hash_combine(util::hash_combine(cfg.seed, 2), static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }

    mse_sum = kl_sum = loss_sum = 0.0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      const std::size_t batch_end =
          std::min(cursor + static_cast<std::size_t>(cfg.batch_size), order.size());
      std::vector<double> grad_sum;
      for (std::size_t b = cursor; b < batch_end; ++b) {
        const std::size_t idx = order[b];
        // One fixed noise draw per sample (common random numbers): the
        // objective becomes a deterministic finite-sample bound, so descent
        // is observable instead of being buried in resampling jitter.
        util::Rng eps_rng(
            util::hash_combine(util::hash_combine(cfg.seed, 3), static_cast<std::uint64_t>(idx)));
        std::vector<double> eps(static_cast<std::size_t>(model.latent_dim));
        for (double& e : eps) e = eps_rng.gaussian();

        const QvaeGradient g = qvae_gradient(model, patches[idx], eps, cfg.beta);
        loss_sum += g.loss.total;
        mse_sum += g.loss.mse;
        kl_sum += g.loss.kl;
        if (grad_sum.empty()) grad_sum.assign(g.flat.size(), 0.0);
        for (std::size_t i = 0; i < g.flat.size(); ++i) grad_sum[i] += g.flat[i];
      }
      const double inv = 1.0 / static_cast<double>(batch_end - cursor);
      for (double& g : grad_sum) g *= inv;

      std::vector<double> flat = pack_qvae_params(model);
      if (adam.m.empty()) {
        adam.m.assign(flat.size(), 0.0);
        adam.v.assign(flat.size(), 0.0);
      }
      ++adam.step;
      const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(adam.step));
      const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(adam.step));
      for (std::size_t i = 0; i < flat.size(); ++i) {
        adam.m[i] = 0.9 * adam.m[i] + 0.1 * grad_sum[i];
        adam.v[i] = 0.999 * adam.v[i] + 0.001 * grad_sum[i] * grad_sum[i];
        flat[i] -= adam.lr * (adam.m[i] / bc1) / (std::sqrt(adam.v[i] / bc2) + 1e-8);
      }
      unpack_qvae_params(model, flat);
      cursor = batch_end;
    }

    const double n = static_cast<double>(patches.size());
    if (epoch_losses) epoch_losses->push_back(loss_sum / n);
    if (cfg.verbose)
      std::printf("qvae epoch %d loss %.6f mse %.6f kl %.6f\n", epoch, loss_sum / n, mse_sum / n,
                  kl_sum / n);
  }

  const double n = static_cast<double>(patches.size());
  model.final_loss = loss_sum / n;
  model.final_mse = mse_sum / n;
  model.final_kl = kl_sum / n;
  model.trained = true;
  return model;
}

void save_qvae(const QvaeModel& model, const std::string& path) {
  model.validate();
  io::TensorFile file;
  std::memcpy(file.magic.data(), kCheckpointMagic, 4);
  file.config = {static_cast<std::uint32_t>(model.m_qubits),
                 static_cast<std::uint32_t>(model.enc_layers),
                 static_cast<std::uint32_t>(model.patch_size),
                 static_cast<std::uint32_t>(model.latent_dim),
                 static_cast<std::uint32_t>(model.sample_rate), model.trained ? 1u : 0u};

  io::Tensor meta;
  meta.dims = {8};
  meta.data = {static_cast<double>(model.n_fft),
               static_cast<double>(model.hop),
               static_cast<double>(model.gl_iters),
               model.final_loss,
               model.final_mse,
               model.final_kl,
               static_cast<double>(model.decoder.weights.size()),
               static_cast<double>(model.recognizer.weights.size())};
  file.tensors.push_back(std::move(meta));

  io::Tensor theta;
  theta.dims = {static_cast<std::uint32_t>(model.theta_enc.size())};
  theta.data = model.theta_enc;
  file.tensors.push_back(std::move(theta));

  for (const Mlp* net : {&model.decoder, &model.recognizer})
    for (std::size_t l = 0; l < net->weights.size(); ++l) {
      io::Tensor w;
      w.dims = {static_cast<std::uint32_t>(net->weights[l].rows),
                static_cast<std::uint32_t>(net->weights[l].cols)};
      w.data = net->weights[l].data;
      file.tensors.push_back(std::move(w));
      io::Tensor b;
      b.dims = {static_cast<std::uint32_t>(net->biases[l].size())};
      b.data = net->biases[l];
      file.tensors.push_back(std::move(b));
    }
  io::write_tensor_file(path, file);
}

QvaeModel load_qvae(const std::string& path) {
  const io::TensorFile file = io::read_tensor_file(path, kCheckpointMagic);
  QvaeModel model;
  model.m_qubits = static_cast<int>(file.config[0]);
  model.enc_layers = static_cast<int>(file.config[1]);
  model.patch_size = static_cast<int>(file.config[2]);
  model.latent_dim = static_cast<int>(file.config[3]);
  model.sample_rate = static_cast<int>(file.config[4]);
  model.trained = file.config[5] != 0;
  if (model.m_qubits < 1 || model.enc_layers < 1)
    throw std::runtime_error("qvae: checkpoint has an invalid register description");
  model.enc_circuit = qsim::build_qasc_circuit(model.m_qubits, model.enc_layers);

  if (file.tensors.size() < 2 || file.tensors[0].dims != std::vector<std::uint32_t>{8})
    throw std::runtime_error("qvae: checkpoint is missing its metadata tensor");
  const std::vector<double>& meta = file.tensors[0].data;
  model.n_fft = static_cast<int>(meta[0]);
  model.hop = static_cast<int>(meta[1]);
  model.gl_iters = static_cast<int>(meta[2]);
  model.final_loss = meta[3];
  model.final_mse = meta[4];
  model.final_kl = meta[5];
  const auto dec_layers = static_cast<std::size_t>(meta[6]);
  const auto rec_layers = static_cast<std::size_t>(meta[7]);

  if (file.tensors[1].dims.size() != 1 ||
      file.tensors[1].data.size() != static_cast<std::size_t>(model.enc_circuit.n_params))
    throw std::runtime_error("qvae: checkpoint theta_enc has the wrong shape");
  model.theta_enc = file.tensors[1].data;

  if (file.tensors.size() != 2 + 2 * (dec_layers + rec_layers))
    throw std::runtime_error("qvae: checkpoint tensor count mismatch");
  std::size_t cursor = 2;
  for (Mlp* net : {&model.decoder, &model.recognizer}) {
    const std::size_t layers = net == &model.decoder ? dec_layers : rec_layers;
    for (std::size_t l = 0; l < layers; ++l) {
      const io::Tensor& w = file.tensors[cursor++];
      const io::Tensor& b = file.tensors[cursor++];
      if (w.dims.size() != 2 || b.dims.size() != 1 || b.data.size() != w.dims[0])
        throw std::runtime_error("qvae: checkpoint network tensor has the wrong shape");
      linalg::Matrix m(w.dims[0], w.dims[1]);
      m.data = w.data;
      net->weights.push_back(std::move(m));
      net->biases.push_back(b.data);
    }
  }
  model.validate();
  return model;
}

}  // namespace qasc::qvae
