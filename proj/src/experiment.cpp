// SPDX-License-Identifier: Apache-2.0
#include "qasc/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "qasc/qvae.hpp"
#include "qasc/rng.hpp"
#include "qasc/wav_io.hpp"

namespace fs = std::filesystem;

namespace qasc::cli {

namespace {

// Stream tag for the shared train/test split; far outside the flat cell
// index range so the split never aliases a cell seed.
constexpr std::uint64_t kSplitStream = 0xB5D4F09A1C83E677ull;

// Sub-stream indices inside one cell.
enum : std::uint64_t {
  kNoiseStream = 1,
  kSubsampleStream = 2,
  kValStream = 3,
  kInitStream = 4,
  kTrainStream = 5,
  kQvaeStream = 6,
};

std::vector<std::vector<int>> group_by_label(const std::vector<int>& pool,
                                             const std::vector<int>& labels, int n_classes) {
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(n_classes));
  for (int idx : pool) groups[static_cast<std::size_t>(labels[static_cast<std::size_t>(idx)])]
      .push_back(idx);
  return groups;
}

void seeded_shuffle(std::vector<int>& v, std::uint64_t seed) {
  util::Rng rng(seed);
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
}

std::string format_snr(double snr_db) {
  if (std::isinf(snr_db)) return "clean";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", snr_db);
  return buf;
}

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;  // NaN renders as "nan"
}

}  // namespace

std::vector<audio::MelPatch> featurize_clip(const audio::Waveform& clip, const AudioBlock& audio,
                                            int patch_size, double snr_db,
                                            std::uint64_t noise_seed) {
  const audio::Waveform noisy = audio::add_noise_at_snr(clip, snr_db, noise_seed);
  std::vector<audio::MelPatch> patches =
      audio::extract_patches(noisy, patch_size, audio.n_fft, audio.hop);
  if (patches.empty())
    throw std::invalid_argument("experiment: clip too short for a single " +
                                std::to_string(patch_size) + "-frame patch");
  return patches;
}

LoadedDataset load_dataset(const ExperimentConfig& config) {
  const DatasetManifest manifest = ingest(config.paths.labels_file, config.paths.dataset_dir);
  if (manifest.class_names.size() < 2)
    throw std::runtime_error("experiment: need at least 2 classes, manifest has " +
                             std::to_string(manifest.class_names.size()));
  if (config.model.n_classes > 0 &&
      config.model.n_classes != static_cast<int>(manifest.class_names.size()))
    throw std::runtime_error("experiment: config expects " +
                             std::to_string(config.model.n_classes) + " classes but manifest has " +
                             std::to_string(manifest.class_names.size()));

  LoadedDataset data;
  data.class_names = manifest.class_names;
  data.n_classes = static_cast<int>(manifest.class_names.size());
  data.clips.reserve(manifest.entries.size());
  data.labels.reserve(manifest.entries.size());
  for (const ManifestEntry& entry : manifest.entries) {
    data.clips.push_back(
        audio::load_audio(resolve_audio_path(manifest, entry), config.audio.sample_rate));
    data.labels.push_back(entry.label);
  }

  if (manifest.has_split_tags) {
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      if (manifest.entries[i].split == "train")
        data.train_indices.push_back(static_cast<int>(i));
      else
        data.test_indices.push_back(static_cast<int>(i));
    }
  } else {
    std::vector<int> all(manifest.entries.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    const std::uint64_t split_seed = util::hash_combine(config.seed, kSplitStream);
    auto groups = group_by_label(all, data.labels, data.n_classes);
    for (std::size_t c = 0; c < groups.size(); ++c) {
      std::vector<int>& g = groups[c];
      seeded_shuffle(g, util::hash_combine(split_seed, c));
      const int n = static_cast<int>(g.size());
      int n_train = static_cast<int>(std::lround(0.7 * n));
      if (n >= 2) n_train = std::clamp(n_train, 1, n - 1);
      for (int i = 0; i < n; ++i)
        (i < n_train ? data.train_indices : data.test_indices).push_back(g[static_cast<std::size_t>(i)]);
    }
    std::sort(data.train_indices.begin(), data.train_indices.end());
    std::sort(data.test_indices.begin(), data.test_indices.end());
  }
  if (data.train_indices.empty()) throw std::runtime_error("experiment: empty training split");
  if (data.test_indices.empty()) throw std::runtime_error("experiment: empty test split");
  return data;
}

std::vector<int> stratified_subsample(const std::vector<int>& pool, const std::vector<int>& labels,
                                      double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("experiment: fraction must lie in (0, 1]");
  int n_classes = 0;
  for (int idx : pool) n_classes = std::max(n_classes, labels[static_cast<std::size_t>(idx)] + 1);
  auto groups = group_by_label(pool, labels, n_classes);
  std::vector<int> picked;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    std::vector<int>& g = groups[c];
    if (g.empty()) continue;
    seeded_shuffle(g, util::hash_combine(seed, c));
    const int n = static_cast<int>(g.size());
    const int k = std::clamp(static_cast<int>(std::lround(fraction * n)), 1, n);
    picked.insert(picked.end(), g.begin(), g.begin() + k);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

CellArtifacts run_cell(const ExperimentConfig& config, const ModelBlock& block,
                       const LoadedDataset& data, double snr_db, double fraction,
                       std::uint64_t cell_seed) {
  const std::uint64_t noise_base = util::hash_combine(cell_seed, kNoiseStream);
  const int p = block.patch_size;

  const auto featurize_pool = [&](const std::vector<int>& pool) {
    train::Dataset ds;
    ds.reserve(pool.size());
    for (int idx : pool) {
      train::Sample s;
      s.patches = featurize_clip(data.clips[static_cast<std::size_t>(idx)], config.audio, p,
                                 snr_db, util::hash_combine(noise_base, idx));
      s.label = data.labels[static_cast<std::size_t>(idx)];
      ds.push_back(std::move(s));
    }
    return ds;
  };

  // Stratified 80/20 validation carve-out from the full training split
  // (never the last clip of a class), then the fraction subsample of the
  // remaining 80%. Validation stays the same size across fractions so the
  // scheduler and early stopping see a stable metric.
  std::vector<int> train_portion;
  std::vector<int> val_pool;
  {
    auto groups = group_by_label(data.train_indices, data.labels, data.n_classes);
    const std::uint64_t val_seed = util::hash_combine(cell_seed, kValStream);
    for (std::size_t c = 0; c < groups.size(); ++c) {
      std::vector<int>& g = groups[c];
      if (g.empty()) continue;
      seeded_shuffle(g, util::hash_combine(val_seed, c));
      const int n = static_cast<int>(g.size());
      const int n_val = n >= 2 ? std::clamp(static_cast<int>(std::lround(0.2 * n)), 1, n - 1) : 0;
      for (int i = 0; i < n; ++i)
        (i < n_val ? val_pool : train_portion).push_back(g[static_cast<std::size_t>(i)]);
    }
    std::sort(train_portion.begin(), train_portion.end());
    std::sort(val_pool.begin(), val_pool.end());
  }
  const std::vector<int> train_pool = stratified_subsample(
      train_portion, data.labels, fraction, util::hash_combine(cell_seed, kSubsampleStream));

  const train::Dataset train_ds = featurize_pool(train_pool);
  const train::Dataset val_ds = featurize_pool(val_pool);

  CellArtifacts out;
  out.model = qit::init_model(to_model_spec(block, data.n_classes),
                              util::hash_combine(cell_seed, kInitStream));

  train::Dataset extra;
  if (block.use_qvae) {
    const std::uint64_t qvae_base = util::hash_combine(cell_seed, kQvaeStream);
    for (int c = 0; c < data.n_classes; ++c) {
      std::vector<audio::MelPatch> class_patches;
      int real_count = 0;
      for (const train::Sample& s : train_ds) {
        if (s.label != c) continue;
        ++real_count;
        class_patches.insert(class_patches.end(), s.patches.begin(), s.patches.end());
      }
      if (real_count == 0) continue;

      qvae::QvaeConfig qcfg;
      qcfg.patch_size = p;
      qcfg.n_fft = config.audio.n_fft;
      qcfg.hop = config.audio.hop;
      qcfg.sample_rate = config.audio.sample_rate;
      qcfg.epochs = 150;
      qcfg.beta = 0.25;
      qcfg.seed = util::hash_combine(qvae_base, static_cast<std::uint64_t>(c));
      if (qcfg.m_qubits >= block.n_qubits)
        throw std::invalid_argument(
            "experiment: generator latent circuit must be smaller than the model");
      const qvae::QvaeModel vae = qvae::train_qvae(class_patches, qcfg);

      const auto aug = qvae::generate_augmented(
          real_count, c, vae, util::hash_combine(qvae_base, 1000 + static_cast<std::uint64_t>(c)));
      const train::Dataset feats =
          train::featurize_augmented(aug, p, config.audio.n_fft, config.audio.hop);
      extra.insert(extra.end(), feats.begin(), feats.end());
    }
    out.n_augmented = extra.size();
  }

  train::TrainConfig tcfg = config.train;
  tcfg.seed = util::hash_combine(cell_seed, kTrainStream);
  out.history = train::train_model(train_ds, val_ds, out.model, tcfg, extra);

  const train::Dataset test_ds = featurize_pool(data.test_indices);
  out.test_metrics = train::evaluate(test_ds, out.model);
  return out;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  const LoadedDataset data = load_dataset(config);
  const std::vector<ModelBlock> blocks = expand_variants(config);
  // Empty lists mean the documented defaults, also for configs built in code.
  const std::vector<double> snrs =
      config.sweep.snr_list.empty() ? std::vector<double>{audio::kCleanSnr} : config.sweep.snr_list;
  const std::vector<double> fractions =
      config.sweep.fraction_list.empty() ? std::vector<double>{1.0} : config.sweep.fraction_list;

  std::vector<ResultRow> rows;
  std::uint64_t cell_index = 0;
  for (const ModelBlock& block : blocks) {
    for (double snr_db : snrs) {
      for (double fraction : fractions) {
        ResultRow row;
        row.config = config_id(block);
        row.snr_db = snr_db;
        row.fraction = fraction;
        const std::uint64_t cell_seed = util::hash_combine(config.seed, cell_index);
        ++cell_index;

        const auto t0 = std::chrono::steady_clock::now();
        try {
          const CellArtifacts cell = run_cell(config, block, data, snr_db, fraction, cell_seed);
          row.accuracy = cell.test_metrics.accuracy;
          row.precision = cell.test_metrics.precision;
          row.recall = cell.test_metrics.recall;
          row.f1 = cell.test_metrics.f1;
        } catch (const std::exception& e) {
          row.failed = true;
          row.error = e.what();
          row.accuracy = row.precision = row.recall = row.f1 =
              std::numeric_limits<double>::quiet_NaN();
        }
        const auto t1 = std::chrono::steady_clock::now();
        row.seconds = config.sweep.deterministic_timing
                          ? 0.0
                          : std::chrono::duration<double>(t1 - t0).count();
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void export_results(const std::vector<ResultRow>& rows, const std::string& output_dir) {
  fs::create_directories(output_dir);

  const fs::path results_path = fs::path(output_dir) / "results.csv";
  std::ofstream out(results_path, std::ios::trunc);
  if (!out) throw std::runtime_error("experiment: cannot write " + results_path.string());
  out << "config,snr_db,fraction,accuracy,precision,recall,f1,seconds\n";
  for (const ResultRow& r : rows) {
    out << r.config << ',' << format_snr(r.snr_db) << ',' << format_metric(r.fraction) << ','
        << format_metric(r.accuracy) << ',' << format_metric(r.precision) << ','
        << format_metric(r.recall) << ',' << format_metric(r.f1) << ','
        << format_metric(r.seconds) << '\n';
  }
  out.close();
  if (!out) throw std::runtime_error("experiment: write failed for " + results_path.string());

  // Accuracy pivot: one row per (config, fraction), clean column first, then
  // ascending SNR.
  std::vector<double> snrs;
  bool has_clean = false;
  for (const ResultRow& r : rows) {
    if (std::isinf(r.snr_db)) {
      has_clean = true;
    } else if (std::find(snrs.begin(), snrs.end(), r.snr_db) == snrs.end()) {
      snrs.push_back(r.snr_db);
    }
  }
  std::sort(snrs.begin(), snrs.end());

  std::vector<std::pair<std::string, double>> keys;  // (config, fraction), first appearance
  for (const ResultRow& r : rows) {
    const std::pair<std::string, double> key(r.config, r.fraction);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }

  const fs::path pivot_path = fs::path(output_dir) / "metrics_by_config.csv";
  std::ofstream pivot(pivot_path, std::ios::trunc);
  if (!pivot) throw std::runtime_error("experiment: cannot write " + pivot_path.string());
  pivot << "config,fraction";
  if (has_clean) pivot << ",clean";
  for (double s : snrs) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", s);
    pivot << ",snr_" << buf << "db";
  }
  pivot << '\n';
  for (const auto& [cfg_id, fraction] : keys) {
    pivot << cfg_id << ',' << format_metric(fraction);
    const auto accuracy_at = [&](double snr) {
      for (const ResultRow& r : rows) {
        const bool snr_match = std::isinf(snr) ? std::isinf(r.snr_db) : r.snr_db == snr;
        if (r.config == cfg_id && r.fraction == fraction && snr_match) return r.accuracy;
      }
      return std::numeric_limits<double>::quiet_NaN();
    };
    if (has_clean) pivot << ',' << format_metric(accuracy_at(audio::kCleanSnr));
    for (double s : snrs) pivot << ',' << format_metric(accuracy_at(s));
    pivot << '\n';
  }
  pivot.close();
  if (!pivot) throw std::runtime_error("experiment: write failed for " + pivot_path.string());
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("experiment: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("experiment: empty results file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "config,snr_db,fraction,accuracy,precision,recall,f1,seconds")
    throw std::runtime_error("experiment: unexpected results header in " + path);

  std::vector<ResultRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 8)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 8 comma-separated fields");
    const auto num = [&](const std::string& v) {
      char* end = nullptr;
      const double x = std::strtod(v.c_str(), &end);
      if (end != v.c_str() + v.size() || v.empty())
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad number '" + v + "'");
      return x;
    };
    ResultRow r;
    r.config = fields[0];
    r.snr_db = fields[1] == "clean" ? audio::kCleanSnr : num(fields[1]);
    r.fraction = num(fields[2]);
    r.accuracy = num(fields[3]);
    r.precision = num(fields[4]);
    r.recall = num(fields[5]);
    r.f1 = num(fields[6]);
    r.seconds = num(fields[7]);
    r.failed = std::isnan(r.accuracy);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace qasc::cli
