// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qasc/qit.hpp"
#include "qasc/train.hpp"

namespace qasc::cli {

// [model] section plus the augmentation switch.
struct ModelBlock {
  int n_qubits = 4;
  int n_layers = 3;
  qit::EncodingMode encoding = qit::EncodingMode::Amplitude;
  qit::PoolingMode pooling = qit::PoolingMode::Max;
  bool use_qvae = false;
  int patch_size = 32;
  int n_classes = 0;  // 0 = infer from the manifest
};

// [audio] section.
struct AudioBlock {
  int sample_rate = 16000;
  int n_fft = 512;
  int hop = 128;
};

// [sweep] section. snr_list entries use audio::kCleanSnr for the no-noise
// sentinel (config tokens "clean" or "inf").
struct SweepBlock {
  std::vector<double> snr_list;       // empty -> {clean}
  std::vector<double> fraction_list;  // empty -> {1.0}; entries in (0, 1]
  std::vector<std::string> variants;  // empty -> just the [model] block
  bool deterministic_timing = false;  // write 0.0 wall-clock for byte-stable CSVs
};

// [paths] section.
struct PathsBlock {
  std::string dataset_dir;  // audio resolution root; empty -> manifest directory
  std::string labels_file;  // manifest path
  std::string output_dir = "out";
};

struct ExperimentConfig {
  ModelBlock model;
  AudioBlock audio;
  train::TrainConfig train;
  SweepBlock sweep;
  PathsBlock paths;
  std::uint64_t seed = 0;
};

// Parses the sectioned key-value config format:
//   seed = 42            (top level, before any section)
//   [model]              (sections: model, audio, train, sweep, paths)
//   n_qubits = 4         (key = value; '#' starts a comment)
// Unknown sections, unknown keys, duplicate keys, and malformed values are
// hard errors naming the line. `name` labels error messages.
ExperimentConfig parse_config(const std::string& text, const std::string& name);

// Reads the file at `path` and parses it.
ExperimentConfig load_config(const std::string& path);

// Short identifier derived from the model fields, used as the results-table
// key: "q{n}_l{L}_{amp|ang}_{max|mean}" plus "_qvae" when augmentation is on.
std::string config_id(const ModelBlock& model);

// Expands [sweep] variants into concrete model blocks. Tokens, each a delta
// on the [model] block: baseline (augmentation off), qvae, qubits6, layers5,
// angle, avgpool (all non-baseline tokens switch augmentation on). An empty
// variant list yields the [model] block unchanged.
std::vector<ModelBlock> expand_variants(const ExperimentConfig& config);

qit::ModelSpec to_model_spec(const ModelBlock& model, int n_classes);

}  // namespace qasc::cli
