// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qasc/config.hpp"
#include "qasc/manifest.hpp"
#include "qasc/qit.hpp"
#include "qasc/train.hpp"

namespace qasc::cli {

// One grid cell's outcome. Failed cells keep NaN metrics and carry the error
// message for the log; they never block other cells.
struct ResultRow {
  std::string config;               // config_id of the model block
  double snr_db = 0.0;              // audio::kCleanSnr for the no-noise cell
  double fraction = 1.0;            // training-subset fraction
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double seconds = 0.0;             // wall clock; 0.0 under deterministic timing
  bool failed = false;
  std::string error;
};

// Clips held in memory with their manifest labels.
struct LoadedDataset {
  std::vector<audio::Waveform> clips;  // resampled to the configured rate
  std::vector<int> labels;
  std::vector<std::string> class_names;  // label order
  int n_classes = 0;
  std::vector<int> train_indices;  // stratified split (or manifest tags)
  std::vector<int> test_indices;
};

// Ingests the manifest, loads and resamples every clip, and fixes the
// train/test split: manifest split tags when present, otherwise a seeded
// stratified 70/30 split shared by all grid cells.
LoadedDataset load_dataset(const ExperimentConfig& config);

// Stratified subsample of `pool` (indices into labels): per class,
// round(fraction * count) clips, at least 1. Deterministic per seed.
std::vector<int> stratified_subsample(const std::vector<int>& pool, const std::vector<int>& labels,
                                      double fraction, std::uint64_t seed);

// Artifacts of one (model, snr, fraction) cell beyond the results row.
struct CellArtifacts {
  qit::QitModel model;
  train::History history;
  train::Metrics test_metrics;
  std::size_t n_augmented = 0;
};

// Runs one grid cell: noise injection at the cell SNR (train and test alike),
// fraction subsample, optional per-class generative augmentation, training,
// evaluation. `cell_seed` owns every random choice inside the cell.
CellArtifacts run_cell(const ExperimentConfig& config, const ModelBlock& block,
                       const LoadedDataset& data, double snr_db, double fraction,
                       std::uint64_t cell_seed);

// Full grid: variants x snr_list x fraction_list, cell seeds derived as
// hash(config.seed, flat cell index). A failing cell yields a failed row;
// the grid continues.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

// Writes results.csv (one row per cell, 6-decimal fixed, "clean" SNR token)
// and metrics_by_config.csv (accuracy pivot: rows config x fraction, columns
// clean then ascending SNR). Overwrites both files.
void export_results(const std::vector<ResultRow>& rows, const std::string& output_dir);

// Parses a results.csv produced by export_results.
std::vector<ResultRow> read_results_csv(const std::string& path);

// Per-clip featurization used by the pipeline: optional noise at snr_db,
// then log-mel patches. Throws when the clip is too short for one patch.
std::vector<audio::MelPatch> featurize_clip(const audio::Waveform& clip, const AudioBlock& audio,
                                            int patch_size, double snr_db,
                                            std::uint64_t noise_seed);

}  // namespace qasc::cli
