// SPDX-License-Identifier: Apache-2.0
#include "qasc/qit.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "qasc/rng.hpp"
#include "qasc/tensor_io.hpp"
#include "qit_internal.hpp"

namespace qasc::qit {

namespace {

constexpr double kDegenerateNorm = 1e-12;
constexpr const char* kCheckpointMagic = "QASC";

std::size_t encoder_input_dim(const ModelSpec& spec) {
  if (spec.encoding == EncodingMode::Amplitude) return std::size_t{1} << spec.n_qubits;
  return static_cast<std::size_t>(3) * spec.n_qubits;
}

// Circuits and zero-sized parameter blocks; no random draws.
QitModel make_model_shell(const ModelSpec& spec) {
  if (spec.n_classes < 2) throw std::invalid_argument("qit: n_classes must be at least 2");
  if (spec.patch_size < 2) throw std::invalid_argument("qit: patch_size must be at least 2");
  if (static_cast<std::size_t>(spec.n_classes) > (std::size_t{1} << spec.n_qubits))
    throw std::invalid_argument("qit: n_classes exceeds the number of basis outcomes 2^n_qubits");

  QitModel model;
  model.spec = spec;
  model.embed_circuit = qsim::build_qasc_circuit(spec.n_qubits, spec.n_layers);
  model.attn_circuit = qsim::build_qasc_circuit(spec.n_qubits, 1);
  model.ffn_circuit = qsim::build_qasc_circuit(spec.n_qubits, 1);

  const std::size_t d_in = static_cast<std::size_t>(spec.patch_size) * spec.patch_size;
  model.projection.weights = linalg::Matrix(d_in, encoder_input_dim(spec));
  model.projection.bias.assign(encoder_input_dim(spec), 0.0);
  model.theta_e.assign(static_cast<std::size_t>(model.embed_circuit.n_params), 0.0);
  model.theta_a.assign(static_cast<std::size_t>(spec.n_layers) * model.attn_circuit.n_params, 0.0);
  model.theta_f.assign(static_cast<std::size_t>(spec.n_layers) * model.ffn_circuit.n_params, 0.0);
  model.head_w = linalg::Matrix(spec.n_classes, spec.n_classes);
  model.head_b.assign(static_cast<std::size_t>(spec.n_classes), 0.0);
  return model;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

int argmax_lowest(const std::vector<double>& values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = static_cast<int>(i);
  return best;
}

void check_layer(const QitModel& model, int layer) {
  if (layer < 0 || layer >= model.spec.n_layers)
    throw std::invalid_argument("qit: layer index " + std::to_string(layer) +
                                " out of range for " + std::to_string(model.spec.n_layers) +
                                " layers");
}

qsim::QuantumState normalized(const qsim::QuantumState& state, double norm, const char* what) {
  if (norm < kDegenerateNorm)
    throw std::runtime_error(std::string("qit: ") + what + " produced a near-zero state");
  qsim::QuantumState out = state;
  for (auto& a : out.amplitudes) a /= norm;
  return out;
}

}  // namespace

std::span<const double> QitModel::attn_params(int layer) const {
  const std::size_t block = static_cast<std::size_t>(attn_circuit.n_params);
  return {theta_a.data() + static_cast<std::size_t>(layer) * block, block};
}

std::span<const double> QitModel::ffn_params(int layer) const {
  const std::size_t block = static_cast<std::size_t>(ffn_circuit.n_params);
  return {theta_f.data() + static_cast<std::size_t>(layer) * block, block};
}

void QitModel::validate() const {
  const std::size_t d_in = static_cast<std::size_t>(spec.patch_size) * spec.patch_size;
  const std::size_t d_out = encoder_input_dim(spec);
  if (projection.weights.rows != d_in || projection.weights.cols != d_out ||
      projection.bias.size() != d_out)
    throw std::invalid_argument("qit: projection shape does not match the model spec");
  if (embed_circuit.n_qubits != spec.n_qubits || attn_circuit.n_qubits != spec.n_qubits ||
      ffn_circuit.n_qubits != spec.n_qubits)
    throw std::invalid_argument("qit: circuit qubit count does not match the model spec");
  if (theta_e.size() != static_cast<std::size_t>(embed_circuit.n_params))
    throw std::invalid_argument("qit: embedding parameter count mismatch");
  if (theta_a.size() != static_cast<std::size_t>(spec.n_layers) * attn_circuit.n_params)
    throw std::invalid_argument("qit: attention parameter count mismatch");
  if (theta_f.size() != static_cast<std::size_t>(spec.n_layers) * ffn_circuit.n_params)
    throw std::invalid_argument("qit: feed-forward parameter count mismatch");
  const auto c = static_cast<std::size_t>(spec.n_classes);
  if (head_w.rows != c || head_w.cols != c || head_b.size() != c)
    throw std::invalid_argument("qit: classification head shape mismatch");
}

QitModel init_model(const ModelSpec& spec, std::uint64_t seed) {
  QitModel model = make_model_shell(spec);
  util::Rng rng(seed);
  for (auto& w : model.projection.weights.data) w = 0.1 * rng.gaussian();
  for (auto& t : model.theta_e) t = rng.uniform(-0.1, 0.1);
  for (auto& t : model.theta_a) t = rng.uniform(-0.1, 0.1);
  for (auto& t : model.theta_f) t = rng.uniform(-0.1, 0.1);
  for (auto& w : model.head_w.data) w = 0.1 * rng.gaussian();
  return model;
}

namespace detail {

EncodeCache encode_patch_impl(const audio::MelPatch& patch, const QitModel& model) {
  const std::size_t d_in = static_cast<std::size_t>(model.spec.patch_size) * model.spec.patch_size;
  if (patch.values.size() != d_in)
    throw std::invalid_argument("qit: patch has " + std::to_string(patch.values.size()) +
                                " values, expected " + std::to_string(d_in));

  EncodeCache cache;
  cache.proj = linalg::matvec_t(model.projection.weights, patch.values);
  for (std::size_t i = 0; i < cache.proj.size(); ++i) cache.proj[i] += model.projection.bias[i];

  if (model.spec.encoding == EncodingMode::Amplitude) {
    double sq = 0.0;
    for (double v : cache.proj) sq += v * v;
    cache.norm = std::sqrt(sq);
    cache.embed_params.assign(model.theta_e.begin(), model.theta_e.end());
    if (cache.norm < kDegenerateNorm) {
      cache.fallback = true;
      cache.initial = qsim::QuantumState::zero(model.spec.n_qubits);
    } else {
      cache.initial.n_qubits = model.spec.n_qubits;
      cache.initial.amplitudes.resize(cache.proj.size());
      for (std::size_t i = 0; i < cache.proj.size(); ++i)
        cache.initial.amplitudes[i] = cache.proj[i] / cache.norm;
    }
  } else {
    cache.initial = qsim::QuantumState::zero(model.spec.n_qubits);
    cache.embed_params.assign(model.theta_e.begin(), model.theta_e.end());
    for (std::size_t i = 0; i < cache.proj.size(); ++i) cache.embed_params[i] += cache.proj[i];
  }
  cache.encoded = qsim::run_circuit(model.embed_circuit, cache.embed_params, cache.initial);
  return cache;
}

ForwardResult forward_impl(const std::vector<audio::MelPatch>& patches, const QitModel& model,
                           ForwardCache* cache) {
  if (patches.empty()) throw std::invalid_argument("qit: forward requires at least one patch");
  model.validate();

  const std::size_t n = patches.size();
  ForwardResult result;
  result.trace.encoded.reserve(n);

  std::vector<qsim::QuantumState> states;
  states.reserve(n);
  for (const auto& patch : patches) {
    EncodeCache enc = encode_patch_impl(patch, model);
    states.push_back(enc.encoded);
    result.trace.encoded.push_back(enc.encoded);
    if (cache) cache->enc.push_back(std::move(enc));
  }

  for (int layer = 0; layer < model.spec.n_layers; ++layer) {
    LayerCache lc;
    lc.overlaps.resize(n * n);
    lc.scores.n = n;
    lc.scores.values.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        lc.overlaps[i * n + j] = qsim::overlap(states[i], states[j]);
        lc.scores.values[i * n + j] = std::norm(lc.overlaps[i * n + j]);
      }

    lc.row_sum.resize(n);
    lc.weights.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < n; ++j) r += lc.scores.values[i * n + j];
      if (r < kDegenerateNorm)
        throw std::runtime_error("qit: attention row sum vanished");
      lc.row_sum[i] = r;
      for (std::size_t j = 0; j < n; ++j) lc.weights[i * n + j] = lc.scores.values[i * n + j] / r;
    }

    const auto a_params = model.attn_params(layer);
    lc.transformed.reserve(n);
    for (std::size_t j = 0; j < n; ++j)
      lc.transformed.push_back(qsim::run_circuit(model.attn_circuit, a_params, states[j]));

    lc.summed.resize(n);
    lc.summed_norm.resize(n);
    lc.attended.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      qsim::QuantumState u;
      u.n_qubits = model.spec.n_qubits;
      u.amplitudes.assign(states[i].dim(), qsim::complexd{0.0, 0.0});
      for (std::size_t j = 0; j < n; ++j) {
        const double w = lc.weights[i * n + j];
        const auto& t = lc.transformed[j].amplitudes;
        for (std::size_t a = 0; a < u.amplitudes.size(); ++a) u.amplitudes[a] += w * t[a];
      }
      lc.summed[i] = u;
      lc.summed_norm[i] = u.norm();
      lc.attended[i] = normalized(u, lc.summed_norm[i], "attention");
    }

    const auto f_params = model.ffn_params(layer);
    lc.ffn_out.resize(n);
    lc.ffn_norm.resize(n);
    lc.out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      lc.ffn_out[i] = qsim::run_circuit(model.ffn_circuit, f_params, lc.attended[i]);
      lc.ffn_norm[i] = lc.ffn_out[i].norm();
      lc.out[i] = normalized(lc.ffn_out[i], lc.ffn_norm[i], "feed-forward");
    }

    states = lc.out;
    result.trace.attention.push_back(lc.scores);
    result.trace.layer_out.push_back(lc.out);
    if (cache) cache->layers.push_back(std::move(lc));
  }

  std::vector<qsim::OutcomeDistribution> dists;
  dists.reserve(n);
  for (const auto& s : states) dists.push_back(qsim::measure_probabilities(s));
  result.trace.distributions = dists;

  const auto c = static_cast<std::size_t>(model.spec.n_classes);
  PooledFeatures pooled;
  pooled.z.assign(c, 0.0);
  std::vector<std::size_t> max_rows(c, 0);
  if (model.spec.pooling == PoolingMode::Mean) {
    for (const auto& d : dists)
      for (std::size_t k = 0; k < c; ++k) pooled.z[k] += d.probs[k] / static_cast<double>(n);
  } else {
    for (std::size_t k = 0; k < c; ++k) {
      pooled.z[k] = dists[0].probs[k];
      for (std::size_t i = 1; i < n; ++i)
        if (dists[i].probs[k] > pooled.z[k]) {
          pooled.z[k] = dists[i].probs[k];
          max_rows[k] = i;
        }
    }
  }
  result.trace.pooled = pooled;

  std::vector<double> logits = linalg::matvec(model.head_w, pooled.z);
  for (std::size_t k = 0; k < c; ++k) logits[k] += model.head_b[k];
  result.trace.logits = logits;
  result.probabilities = softmax(logits);
  result.label = argmax_lowest(result.probabilities);

  if (cache) {
    cache->dists = std::move(dists);
    cache->z = pooled.z;
    cache->max_rows = std::move(max_rows);
    cache->logits = logits;
    cache->probabilities = result.probabilities;
    cache->label = result.label;
  }
  return result;
}

}  // namespace detail

qsim::QuantumState encode_patch(const audio::MelPatch& patch, const QitModel& model) {
  model.validate();
  return detail::encode_patch_impl(patch, model).encoded;
}

AttentionMatrix attention_scores(const std::vector<qsim::QuantumState>& states) {
  if (states.empty()) throw std::invalid_argument("qit: attention requires at least one state");
  AttentionMatrix scores;
  scores.n = states.size();
  scores.values.resize(scores.n * scores.n);
  for (std::size_t i = 0; i < scores.n; ++i)
    for (std::size_t j = 0; j < scores.n; ++j)
      scores.at(i, j) = qsim::fidelity(states[i], states[j]);
  return scores;
}

std::vector<qsim::QuantumState> attend(const std::vector<qsim::QuantumState>& states,
                                       const AttentionMatrix& scores, const QitModel& model,
                                       int layer) {
  if (states.empty()) throw std::invalid_argument("qit: attend requires at least one state");
  if (scores.n != states.size())
    throw std::invalid_argument("qit: attention matrix size does not match the state count");
  check_layer(model, layer);

  const std::size_t n = states.size();
  const auto params = model.attn_params(layer);
  std::vector<qsim::QuantumState> transformed;
  transformed.reserve(n);
  for (const auto& s : states)
    transformed.push_back(qsim::run_circuit(model.attn_circuit, params, s));

  std::vector<qsim::QuantumState> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) r += scores.at(i, j);
    if (r < kDegenerateNorm) throw std::runtime_error("qit: attention row sum vanished");
    qsim::QuantumState u;
    u.n_qubits = states[i].n_qubits;
    u.amplitudes.assign(states[i].dim(), qsim::complexd{0.0, 0.0});
    for (std::size_t j = 0; j < n; ++j) {
      const double w = scores.at(i, j) / r;
      for (std::size_t a = 0; a < u.amplitudes.size(); ++a)
        u.amplitudes[a] += w * transformed[j].amplitudes[a];
    }
    out[i] = normalized(u, u.norm(), "attention");
  }
  return out;
}

qsim::QuantumState feedforward(const qsim::QuantumState& state, const QitModel& model,
                               int layer) {
  check_layer(model, layer);
  qsim::QuantumState out = qsim::run_circuit(model.ffn_circuit, model.ffn_params(layer), state);
  return normalized(out, out.norm(), "feed-forward");
}

PooledFeatures pool(const std::vector<qsim::OutcomeDistribution>& dists, const QitModel& model) {
  if (dists.empty()) throw std::invalid_argument("qit: pool requires at least one distribution");
  const auto c = static_cast<std::size_t>(model.spec.n_classes);
  for (const auto& d : dists)
    if (d.probs.size() < c)
      throw std::invalid_argument("qit: distribution shorter than n_classes");

  PooledFeatures pooled;
  pooled.z.assign(c, 0.0);
  if (model.spec.pooling == PoolingMode::Mean) {
    for (const auto& d : dists)
      for (std::size_t k = 0; k < c; ++k) pooled.z[k] += d.probs[k] / static_cast<double>(dists.size());
  } else {
    for (std::size_t k = 0; k < c; ++k) {
      pooled.z[k] = dists[0].probs[k];
      for (std::size_t i = 1; i < dists.size(); ++i)
        pooled.z[k] = std::max(pooled.z[k], dists[i].probs[k]);
    }
  }
  return pooled;
}

Classification classify(const PooledFeatures& features, const QitModel& model) {
  const auto c = static_cast<std::size_t>(model.spec.n_classes);
  if (features.z.size() != c)
    throw std::invalid_argument("qit: pooled feature length does not match n_classes");
  std::vector<double> logits = linalg::matvec(model.head_w, features.z);
  for (std::size_t k = 0; k < c; ++k) logits[k] += model.head_b[k];
  Classification cls;
  cls.probabilities = softmax(logits);
  cls.label = argmax_lowest(cls.probabilities);
  return cls;
}

ForwardResult forward(const std::vector<audio::MelPatch>& patches, const QitModel& model) {
  return detail::forward_impl(patches, model, nullptr);
}

std::vector<double> pack_params(const QitModel& model) {
  std::vector<double> flat;
  flat.reserve(model.projection.weights.size() + model.projection.bias.size() +
               model.theta_e.size() + model.theta_a.size() + model.theta_f.size() +
               model.head_w.size() + model.head_b.size());
  auto append = [&flat](const std::vector<double>& v) {
    flat.insert(flat.end(), v.begin(), v.end());
  };
  append(model.projection.weights.data);
  append(model.projection.bias);
  append(model.theta_e);
  append(model.theta_a);
  append(model.theta_f);
  append(model.head_w.data);
  append(model.head_b);
  return flat;
}

void unpack_params(QitModel& model, std::span<const double> flat) {
  std::size_t offset = 0;
  auto take = [&](std::vector<double>& dst) {
    if (offset + dst.size() > flat.size())
      throw std::invalid_argument("qit: packed parameter vector is too short");
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.begin() + static_cast<std::ptrdiff_t>(offset + dst.size()), dst.begin());
    offset += dst.size();
  };
  take(model.projection.weights.data);
  take(model.projection.bias);
  take(model.theta_e);
  take(model.theta_a);
  take(model.theta_f);
  take(model.head_w.data);
  take(model.head_b);
  if (offset != flat.size())
    throw std::invalid_argument("qit: packed parameter vector is too long");
}

std::vector<double> pack_gradient(const ModelGradient& grad) {
  std::vector<double> flat;
  auto append = [&flat](const std::vector<double>& v) {
    flat.insert(flat.end(), v.begin(), v.end());
  };
  append(grad.proj_w.data);
  append(grad.proj_b);
  append(grad.theta_e);
  append(grad.theta_a);
  append(grad.theta_f);
  append(grad.head_w.data);
  append(grad.head_b);
  return flat;
}

void save_checkpoint(const QitModel& model, const std::string& path) {
  model.validate();
  io::TensorFile file;
  std::memcpy(file.magic.data(), kCheckpointMagic, 4);
  file.config = {static_cast<std::uint32_t>(model.spec.n_qubits),
                 static_cast<std::uint32_t>(model.spec.n_layers),
                 model.spec.encoding == EncodingMode::Amplitude ? 0u : 1u,
                 model.spec.pooling == PoolingMode::Mean ? 0u : 1u,
                 static_cast<std::uint32_t>(model.spec.n_classes),
                 static_cast<std::uint32_t>(model.spec.patch_size)};
  auto vec_tensor = [](const std::vector<double>& v) {
    io::Tensor t;
    t.dims = {static_cast<std::uint32_t>(v.size())};
    t.data = v;
    return t;
  };
  auto mat_tensor = [](const linalg::Matrix& m) {
    io::Tensor t;
    t.dims = {static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)};
    t.data = m.data;
    return t;
  };
  file.tensors.push_back(mat_tensor(model.projection.weights));
  file.tensors.push_back(vec_tensor(model.projection.bias));
  file.tensors.push_back(vec_tensor(model.theta_e));
  file.tensors.push_back(vec_tensor(model.theta_a));
  file.tensors.push_back(vec_tensor(model.theta_f));
  file.tensors.push_back(mat_tensor(model.head_w));
  file.tensors.push_back(vec_tensor(model.head_b));
  io::write_tensor_file(path, file);
}

QitModel load_checkpoint(const std::string& path) {
  const io::TensorFile file = io::read_tensor_file(path, kCheckpointMagic);
  ModelSpec spec;
  spec.n_qubits = static_cast<int>(file.config[0]);
  spec.n_layers = static_cast<int>(file.config[1]);
  spec.encoding = file.config[2] == 0 ? EncodingMode::Amplitude : EncodingMode::Angle;
  spec.pooling = file.config[3] == 0 ? PoolingMode::Mean : PoolingMode::Max;
  spec.n_classes = static_cast<int>(file.config[4]);
  spec.patch_size = static_cast<int>(file.config[5]);
  if (file.config[2] > 1 || file.config[3] > 1)
    throw std::runtime_error("qit: checkpoint has an unknown encoding or pooling code");

  QitModel model = make_model_shell(spec);
  if (file.tensors.size() != 7)
    throw std::runtime_error("qit: checkpoint must hold exactly 7 tensors, found " +
                             std::to_string(file.tensors.size()));
  auto take_vec = [&](std::size_t idx, std::vector<double>& dst, const char* name) {
    const io::Tensor& t = file.tensors[idx];
    if (t.dims.size() != 1 || t.data.size() != dst.size())
      throw std::runtime_error(std::string("qit: checkpoint tensor '") + name +
                               "' has the wrong shape");
    dst = t.data;
  };
  auto take_mat = [&](std::size_t idx, linalg::Matrix& dst, const char* name) {
    const io::Tensor& t = file.tensors[idx];
    if (t.dims.size() != 2 || t.dims[0] != dst.rows || t.dims[1] != dst.cols)
      throw std::runtime_error(std::string("qit: checkpoint tensor '") + name +
                               "' has the wrong shape");
    dst.data = t.data;
  };
  take_mat(0, model.projection.weights, "projection.weights");
  take_vec(1, model.projection.bias, "projection.bias");
  take_vec(2, model.theta_e, "theta_e");
  take_vec(3, model.theta_a, "theta_a");
  take_vec(4, model.theta_f, "theta_f");
  take_mat(5, model.head_w, "head_w");
  take_vec(6, model.head_b, "head_b");
  model.validate();
  return model;
}

}  // namespace qasc::qit
