// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qasc/audio.hpp"
#include "qasc/linalg.hpp"
#include "qasc/qit.hpp"
#include "qasc/qvae.hpp"

namespace qasc::train {

// One labelled clip: the patches extracted from its log-mel spectrogram.
struct Sample {
  std::vector<audio::MelPatch> patches;
  int label = 0;
};

using Dataset = std::vector<Sample>;

// -log(max(predicted[label], 1e-12)).
double cross_entropy(std::span<const double> predicted, int label);

struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

// Bias-corrected Adam update, in place on `params`.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad);

// Multiplies the learning rate by `factor` after `patience` consecutive
// epochs without a metric improvement of more than 1e-6; a reduction restarts
// the wait but keeps the best value seen.
struct PlateauScheduler {
  double factor = 0.5;
  int patience = 10;
  double min_lr = 1e-6;
  double best = -1e300;
  int stale = 0;
};

// Returns true when the learning rate was reduced this call.
bool scheduler_step(PlateauScheduler& sched, double metric, double& lr);

// Stops after `patience` consecutive epochs without improvement.
struct EarlyStopper {
  int patience = 5;
  double best = -1e300;
  int stale = 0;
};

bool early_stop_check(EarlyStopper& stopper, double metric);

struct TrainConfig {
  int max_epochs = 50;
  int batch_size = 8;
  double learning_rate = 0.001;
  double scheduler_factor = 0.5;
  int scheduler_patience = 10;
  int early_stop_patience = 5;
  std::uint64_t seed = 0;
  bool verbose = false;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double lr = 0.0;
};

struct History {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;  // earliest epoch with the highest val accuracy
  double best_accuracy = 0.0;
  bool early_stopped = false;
};

// Mini-batch Adam training with the plateau scheduler and early stopping.
// `extra` holds augmentation samples mixed into the training pool before the
// seeded per-epoch shuffle. Returns the best model by validation accuracy;
// max_epochs = 0 returns the initial model with an empty history.
History train_model(const Dataset& train_set, const Dataset& val_set, qit::QitModel& model,
                    const TrainConfig& cfg, const Dataset& extra = {});

// Extracts log-mel patches from generated waveforms so they can join a
// training pool. Throws when an item is too short to produce a single patch.
Dataset featurize_augmented(const qvae::AugmentedDataset& aug, int p, int n_fft, int hop);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // row sum of the confusion matrix
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;  // macro average
  double recall = 0.0;     // macro average
  double f1 = 0.0;         // macro average
  std::vector<ClassMetrics> per_class;
  linalg::Matrix confusion;  // rows actual, columns predicted
};

Metrics evaluate(const Dataset& data, const qit::QitModel& model);
Metrics metrics_from_confusion(const linalg::Matrix& confusion);

void write_history_csv(const History& history, const std::string& path);

}  // namespace qasc::train
