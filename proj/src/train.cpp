// SPDX-License-Identifier: Apache-2.0
#include "qasc/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "qasc/rng.hpp"

namespace qasc::train {

namespace {

constexpr double kImprovementMargin = 1e-6;

void shuffle_indices(std::vector<std::size_t>& idx, util::Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(idx[i - 1], idx[j]);
  }
}

void check_labels(const Dataset& data, int n_classes, const char* which) {
  for (const Sample& s : data)
    if (s.label < 0 || s.label >= n_classes)
      throw std::invalid_argument(std::string("train: ") + which + " sample label " +
                                  std::to_string(s.label) + " out of range");
}

}  // namespace

double cross_entropy(std::span<const double> predicted, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= predicted.size())
    throw std::invalid_argument("train: cross-entropy label out of range");
  return -std::log(std::max(predicted[static_cast<std::size_t>(label)], 1e-12));
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size())
    throw std::invalid_argument("train: parameter and gradient sizes differ");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size())
    throw std::invalid_argument("train: optimizer state size does not match the parameters");

  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

bool scheduler_step(PlateauScheduler& sched, double metric, double& lr) {
  if (metric > sched.best + kImprovementMargin) {
    sched.best = metric;
    sched.stale = 0;
    return false;
  }
  if (++sched.stale >= sched.patience) {
    sched.stale = 0;
    lr = std::max(lr * sched.factor, sched.min_lr);
    return true;
  }
  return false;
}

bool early_stop_check(EarlyStopper& stopper, double metric) {
  if (metric > stopper.best + kImprovementMargin) {
    stopper.best = metric;
    stopper.stale = 0;
    return false;
  }
  return ++stopper.stale >= stopper.patience;
}

History train_model(const Dataset& train_set, const Dataset& val_set, qit::QitModel& model,
                    const TrainConfig& cfg, const Dataset& extra) {
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (cfg.max_epochs < 0 || cfg.batch_size < 1)
    throw std::invalid_argument("train: max_epochs must be non-negative, batch_size positive");
  if (cfg.scheduler_factor <= 0.0 || cfg.scheduler_factor >= 1.0)
    throw std::invalid_argument("train: scheduler_factor must lie strictly between 0 and 1");
  if (cfg.scheduler_patience < 1 || cfg.early_stop_patience < 1)
    throw std::invalid_argument("train: patiences must be at least 1");
  model.validate();
  check_labels(train_set, model.spec.n_classes, "training");
  check_labels(val_set, model.spec.n_classes, "validation");
  check_labels(extra, model.spec.n_classes, "augmentation");
  if (cfg.max_epochs == 0) return {};

  Dataset pool = train_set;
  pool.insert(pool.end(), extra.begin(), extra.end());
  const Dataset& val = val_set.empty() ? train_set : val_set;

  AdamState adam;
  adam.lr = cfg.learning_rate;
  PlateauScheduler sched;
  sched.factor = cfg.scheduler_factor;
  sched.patience = cfg.scheduler_patience;
  EarlyStopper stopper;
  stopper.patience = cfg.early_stop_patience;

  History history;
  double best_acc = -1.0;
  std::vector<double> best_params;

  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    util::Rng rng(util::hash_combine(cfg.seed, static_cast<std::uint64_t>(epoch)));
    shuffle_indices(order, rng);

    double loss_sum = 0.0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      const std::size_t batch_end =
          std::min(cursor + static_cast<std::size_t>(cfg.batch_size), order.size());
      std::vector<double> grad_sum;
      for (std::size_t b = cursor; b < batch_end; ++b) {
        const Sample& s = pool[order[b]];
        const qit::ModelGradient g = qit::model_gradient(s.patches, s.label, model);
        loss_sum += g.loss;
        const std::vector<double> flat_g = qit::pack_gradient(g);
        if (grad_sum.empty()) grad_sum.assign(flat_g.size(), 0.0);
        for (std::size_t i = 0; i < flat_g.size(); ++i) grad_sum[i] += flat_g[i];
      }
      const double inv = 1.0 / static_cast<double>(batch_end - cursor);
      for (double& g : grad_sum) g *= inv;

      std::vector<double> flat = qit::pack_params(model);
      adam_step(adam, flat, grad_sum);
      qit::unpack_params(model, flat);
      cursor = batch_end;
    }

    const double train_loss = loss_sum / static_cast<double>(pool.size());
    const double val_acc = evaluate(val, model).accuracy;

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = train_loss;
    stats.val_accuracy = val_acc;
    stats.lr = adam.lr;
    history.epochs.push_back(stats);
    if (cfg.verbose)
      std::printf("epoch %d loss %.6f val_acc %.4f lr %.6g\n", epoch, train_loss, val_acc,
                  adam.lr);

    if (val_acc > best_acc) {
      best_acc = val_acc;
      history.best_epoch = epoch;
      history.best_accuracy = val_acc;
      best_params = qit::pack_params(model);
    }

    scheduler_step(sched, val_acc, adam.lr);
    if (early_stop_check(stopper, val_acc)) {
      history.early_stopped = true;
      break;
    }
  }

  if (!best_params.empty()) qit::unpack_params(model, best_params);
  return history;
}

Metrics metrics_from_confusion(const linalg::Matrix& confusion) {
  if (confusion.rows != confusion.cols || confusion.rows == 0)
    throw std::invalid_argument("train: confusion matrix must be square and non-empty");
  const std::size_t c = confusion.rows;

  double total = 0.0, correct = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    correct += confusion.at(i, i);
    for (std::size_t j = 0; j < c; ++j) total += confusion.at(i, j);
  }

  Metrics m;
  m.confusion = confusion;
  m.accuracy = total > 0.0 ? correct / total : 0.0;
  double p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    double col = 0.0, row = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
      col += confusion.at(i, k);
      row += confusion.at(k, i);
    }
    const double tp = confusion.at(k, k);
    ClassMetrics cm;
    cm.precision = col > 0.0 ? tp / col : 0.0;
    cm.recall = row > 0.0 ? tp / row : 0.0;
    cm.f1 = cm.precision + cm.recall > 0.0
                ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall)
                : 0.0;
    cm.support = static_cast<std::size_t>(row);
    m.per_class.push_back(cm);
    p_sum += cm.precision;
    r_sum += cm.recall;
    f_sum += cm.f1;
  }
  m.precision = p_sum / static_cast<double>(c);
  m.recall = r_sum / static_cast<double>(c);
  m.f1 = f_sum / static_cast<double>(c);
  return m;
}

Dataset featurize_augmented(const qvae::AugmentedDataset& aug, int p, int n_fft, int hop) {
  Dataset out;
  out.reserve(aug.items.size());
  for (const qvae::AugmentedItem& item : aug.items) {
    Sample s;
    s.patches = audio::extract_patches(item.waveform, p, n_fft, hop);
    if (s.patches.empty())
      throw std::invalid_argument("train: generated waveform too short for a single patch");
    s.label = item.label;
    out.push_back(std::move(s));
  }
  return out;
}

Metrics evaluate(const Dataset& data, const qit::QitModel& model) {
  if (data.empty()) throw std::invalid_argument("train: cannot evaluate an empty dataset");
  model.validate();
  check_labels(data, model.spec.n_classes, "evaluation");

  const auto c = static_cast<std::size_t>(model.spec.n_classes);
  linalg::Matrix confusion(c, c);
  for (const Sample& s : data) {
    const qit::ForwardResult res = qit::forward(s.patches, model);
    confusion.at(static_cast<std::size_t>(s.label), static_cast<std::size_t>(res.label)) += 1.0;
  }
  return metrics_from_confusion(confusion);
}

void write_history_csv(const History& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("train: cannot open " + path);
  out << "epoch,train_loss,val_accuracy,lr\n";
  char line[128];
  for (const EpochStats& e : history.epochs) {
    std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6g\n", e.epoch, e.train_loss,
                  e.val_accuracy, e.lr);
    out << line;
  }
  if (!out) throw std::runtime_error("train: short write to " + path);
}

}  // namespace qasc::train
