// SPDX-License-Identifier: Apache-2.0
// Command-line benchmark harness: corpus synthesis, manifest ingestion,
// feature caching, training, generative augmentation, evaluation, and the
// (variant x SNR x fraction) sweep with CSV export.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qasc/config.hpp"
#include "qasc/experiment.hpp"
#include "qasc/manifest.hpp"
#include "qasc/qvae.hpp"
#include "qasc/rng.hpp"
#include "qasc/synth.hpp"
#include "qasc/tensor_io.hpp"
#include "qasc/wav_io.hpp"

namespace fs = std::filesystem;
using namespace qasc;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool verbose = false;
};

cli::ExperimentConfig load_effective_config(const GlobalArgs& args) {
  if (args.config_path.empty())
    throw std::runtime_error("this subcommand needs --config <file>");
  cli::ExperimentConfig cfg = cli::load_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (!args.out_dir.empty()) cfg.paths.output_dir = args.out_dir;
  cfg.train.verbose = args.verbose;
  return cfg;
}

std::string snr_label(double snr_db) {
  if (std::isinf(snr_db)) return "clean";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g dB", snr_db);
  return buf;
}

void print_metrics(const train::Metrics& m, const std::vector<std::string>& class_names) {
  std::printf("accuracy  %.4f\nprecision %.4f\nrecall    %.4f\nf1        %.4f\n", m.accuracy,
              m.precision, m.recall, m.f1);
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    const auto& pc = m.per_class[c];
    const std::string name = c < class_names.size() ? class_names[c] : std::to_string(c);
    std::printf("  class %-12s precision %.4f  recall %.4f  f1 %.4f  support %zu\n", name.c_str(),
                pc.precision, pc.recall, pc.f1, pc.support);
  }
}

int cmd_synth(const GlobalArgs& args, const cli::SynthSpec& spec) {
  const std::string out = args.out_dir.empty() ? "data/synthetic" : args.out_dir;
  const std::string manifest = cli::synth_corpus(out, spec, args.seed);
  std::printf("wrote %d clips x %zu classes at %d Hz\nmanifest: %s\n", spec.clips_per_class,
              cli::synth_class_names().size(), spec.sample_rate, manifest.c_str());
  return 0;
}

int cmd_ingest(const GlobalArgs& args) {
  const cli::ExperimentConfig cfg = load_effective_config(args);
  const cli::DatasetManifest manifest =
      cli::ingest(cfg.paths.labels_file, cfg.paths.dataset_dir);
  std::printf("%zu clips, %zu classes%s\n", manifest.entries.size(), manifest.class_names.size(),
              manifest.has_split_tags ? " (manifest split tags)" : "");
  std::vector<std::size_t> counts(manifest.class_names.size(), 0);
  for (const auto& e : manifest.entries) ++counts[static_cast<std::size_t>(e.label)];
  for (std::size_t c = 0; c < manifest.class_names.size(); ++c)
    std::printf("  %2zu  %-16s %zu clips\n", c, manifest.class_names[c].c_str(), counts[c]);
  return 0;
}

int cmd_featurize(const GlobalArgs& args) {
  const cli::ExperimentConfig cfg = load_effective_config(args);
  const cli::DatasetManifest manifest =
      cli::ingest(cfg.paths.labels_file, cfg.paths.dataset_dir);
  const fs::path feat_dir = fs::path(cfg.paths.output_dir) / "features";
  fs::create_directories(feat_dir);

  std::ofstream index(feat_dir / "index.tsv");
  if (!index) throw std::runtime_error("featurize: cannot write index in " + feat_dir.string());
  const int p = cfg.model.patch_size;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& entry = manifest.entries[i];
    const audio::Waveform clip =
        audio::load_audio(cli::resolve_audio_path(manifest, entry), cfg.audio.sample_rate);
    const auto patches = cli::featurize_clip(clip, cfg.audio, p, audio::kCleanSnr, 0);

    io::TensorFile file;
    file.magic = {'Q', 'A', 'S', 'C'};
    file.config = {static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(cfg.audio.n_fft),
                   static_cast<std::uint32_t>(cfg.audio.hop),
                   static_cast<std::uint32_t>(cfg.audio.sample_rate),
                   static_cast<std::uint32_t>(patches.size()),
                   static_cast<std::uint32_t>(entry.label)};
    io::Tensor t;
    t.dims = {static_cast<std::uint32_t>(patches.size()), static_cast<std::uint32_t>(p),
              static_cast<std::uint32_t>(p)};
    for (const auto& patch : patches)
      t.data.insert(t.data.end(), patch.values.begin(), patch.values.end());
    file.tensors.push_back(std::move(t));

    char name[32];
    std::snprintf(name, sizeof(name), "clip_%04zu.feat", i);
    io::write_tensor_file((feat_dir / name).string(), file);
    index << name << '\t' << entry.path << '\t' << entry.class_name << '\n';
  }
  index.close();
  if (!index) throw std::runtime_error("featurize: index write failed");
  std::printf("wrote %zu feature files to %s\n", manifest.entries.size(), feat_dir.c_str());
  return 0;
}

int cmd_train(const GlobalArgs& args) {
  const cli::ExperimentConfig cfg = load_effective_config(args);
  const cli::LoadedDataset data = cli::load_dataset(cfg);
  const std::uint64_t cell_seed = util::hash_combine(cfg.seed, 0);
  const cli::CellArtifacts cell =
      cli::run_cell(cfg, cfg.model, data, audio::kCleanSnr, 1.0, cell_seed);

  fs::create_directories(cfg.paths.output_dir);
  const std::string model_path = (fs::path(cfg.paths.output_dir) / "qit_model.bin").string();
  qit::save_checkpoint(cell.model, model_path);
  train::write_history_csv(cell.history,
                           (fs::path(cfg.paths.output_dir) / "history.csv").string());

  std::printf("config %s: trained %zu epochs (best epoch %d, val accuracy %.4f)\n",
              cli::config_id(cfg.model).c_str(), cell.history.epochs.size(),
              cell.history.best_epoch, cell.history.best_accuracy);
  if (cfg.model.use_qvae) std::printf("augmented samples mixed in: %zu\n", cell.n_augmented);
  std::printf("test metrics:\n");
  print_metrics(cell.test_metrics, data.class_names);
  std::printf("model: %s\n", model_path.c_str());
  return 0;
}

int cmd_augment(const GlobalArgs& args) {
  const cli::ExperimentConfig cfg = load_effective_config(args);
  const cli::LoadedDataset data = cli::load_dataset(cfg);
  const fs::path aug_dir = fs::path(cfg.paths.output_dir) / "augmented";
  fs::create_directories(aug_dir);

  std::ofstream meta(aug_dir / "meta.txt");
  if (!meta) throw std::runtime_error("augment: cannot write manifest in " + aug_dir.string());
  const std::uint64_t base = util::hash_combine(cfg.seed, 0xA0611ull);
  const int p = cfg.model.patch_size;
  for (int c = 0; c < data.n_classes; ++c) {
    std::vector<audio::MelPatch> class_patches;
    int real_count = 0;
    for (int idx : data.train_indices) {
      if (data.labels[static_cast<std::size_t>(idx)] != c) continue;
      ++real_count;
      const auto patches = cli::featurize_clip(data.clips[static_cast<std::size_t>(idx)],
                                               cfg.audio, p, audio::kCleanSnr, 0);
      class_patches.insert(class_patches.end(), patches.begin(), patches.end());
    }
    if (real_count == 0) continue;

    qvae::QvaeConfig qcfg;
    qcfg.patch_size = p;
    qcfg.n_fft = cfg.audio.n_fft;
    qcfg.hop = cfg.audio.hop;
    qcfg.sample_rate = cfg.audio.sample_rate;
    qcfg.epochs = 60;
    qcfg.verbose = args.verbose;
    qcfg.seed = util::hash_combine(base, static_cast<std::uint64_t>(c));
    const qvae::QvaeModel vae = qvae::train_qvae(class_patches, qcfg);
    const std::string& name = data.class_names[static_cast<std::size_t>(c)];
    qvae::save_qvae(vae, (fs::path(cfg.paths.output_dir) / ("qvae_" + name + ".bin")).string());

    const auto aug = qvae::generate_augmented(
        real_count, c, vae, util::hash_combine(base, 1000 + static_cast<std::uint64_t>(c)));
    for (std::size_t i = 0; i < aug.items.size(); ++i) {
      char wav_name[64];
      std::snprintf(wav_name, sizeof(wav_name), "%s_aug_%03zu.wav", name.c_str(), i);
      audio::write_wav_pcm16((aug_dir / wav_name).string(), aug.items[i].waveform);
      meta << wav_name << '\t' << name << '\n';
    }
    std::printf("class %-12s trained on %d clips (loss %.4f), generated %zu clips\n",
                name.c_str(), real_count, vae.final_loss, aug.items.size());
  }
  meta.close();
  if (!meta) throw std::runtime_error("augment: manifest write failed");
  std::printf("augmented corpus: %s\n", aug_dir.c_str());
  return 0;
}

int cmd_evaluate(const GlobalArgs& args, const std::string& model_path,
                 const std::string& snr_token) {
  const cli::ExperimentConfig cfg = load_effective_config(args);
  const cli::LoadedDataset data = cli::load_dataset(cfg);
  const qit::QitModel model = qit::load_checkpoint(model_path);
  if (model.spec.n_classes != data.n_classes)
    throw std::runtime_error("evaluate: checkpoint expects " +
                             std::to_string(model.spec.n_classes) + " classes, manifest has " +
                             std::to_string(data.n_classes));

  double snr_db = audio::kCleanSnr;
  if (snr_token != "clean" && snr_token != "inf") snr_db = std::stod(snr_token);

  const std::uint64_t noise_base = util::hash_combine(cfg.seed, 0xE7A1ull);
  train::Dataset test_ds;
  for (int idx : data.test_indices) {
    train::Sample s;
    s.patches = cli::featurize_clip(data.clips[static_cast<std::size_t>(idx)], cfg.audio,
                                    model.spec.patch_size, snr_db,
                                    util::hash_combine(noise_base, idx));
    s.label = data.labels[static_cast<std::size_t>(idx)];
    test_ds.push_back(std::move(s));
  }
  const train::Metrics m = train::evaluate(test_ds, model);
  std::printf("test split (%zu clips) at %s:\n", test_ds.size(), snr_label(snr_db).c_str());
  print_metrics(m, data.class_names);
  return 0;
}

int cmd_sweep(const GlobalArgs& args) {
  const cli::ExperimentConfig cfg = load_effective_config(args);
  const std::vector<cli::ResultRow> rows = cli::run_experiment(cfg);
  cli::export_results(rows, cfg.paths.output_dir);

  int failed = 0;
  for (const auto& r : rows) {
    if (r.failed) {
      ++failed;
      std::fprintf(stderr, "cell %s snr=%s fraction=%.2f failed: %s\n", r.config.c_str(),
                   snr_label(r.snr_db).c_str(), r.fraction, r.error.c_str());
    } else {
      std::printf("%s  snr=%-8s fraction=%.2f  accuracy %.4f  f1 %.4f  (%.1fs)\n",
                  r.config.c_str(), snr_label(r.snr_db).c_str(), r.fraction, r.accuracy, r.f1,
                  r.seconds);
    }
  }
  std::printf("results: %s\n", (fs::path(cfg.paths.output_dir) / "results.csv").c_str());
  return failed > 0 ? 2 : 0;
}

int cmd_export(const GlobalArgs& args) {
  const cli::ExperimentConfig cfg = load_effective_config(args);
  const std::string results = (fs::path(cfg.paths.output_dir) / "results.csv").string();
  const std::vector<cli::ResultRow> rows = cli::read_results_csv(results);
  cli::export_results(rows, cfg.paths.output_dir);
  std::printf("rewrote results.csv and metrics_by_config.csv for %zu rows in %s\n", rows.size(),
              cfg.paths.output_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-inspired acoustic scene classification harness"};
  app.require_subcommand(1);

  GlobalArgs args;
  app.add_option("--config", args.config_path, "Experiment config file");
  app.add_option("--seed", args.seed, "Override the config seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  app.add_option("--out", args.out_dir, "Override the output directory");
  app.add_flag("--verbose", args.verbose, "Per-epoch progress on stderr");

  cli::SynthSpec synth_spec;
  auto* synth = app.add_subcommand("synth", "Generate the bundled synthetic corpus");
  synth->add_option("--clips", synth_spec.clips_per_class, "Clips per class")
      ->capture_default_str();
  synth->add_option("--duration", synth_spec.duration_s, "Clip length in seconds")
      ->capture_default_str();
  synth->add_option("--rate", synth_spec.sample_rate, "Sample rate in Hz")->capture_default_str();

  auto* ingest = app.add_subcommand("ingest", "Parse and validate the dataset manifest");
  auto* featurize = app.add_subcommand("featurize", "Write per-clip log-mel feature tensors");
  auto* train_cmd = app.add_subcommand("train", "Train one model on the full clean training split");
  auto* augment = app.add_subcommand("augment", "Train per-class generators and synthesize clips");

  std::string model_path;
  std::string snr_token = "clean";
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on the test split");
  evaluate->add_option("--model", model_path, "Model checkpoint path")->required();
  evaluate->add_option("--snr", snr_token, "Noise level in dB, or 'clean'")
      ->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Run the variant x SNR x fraction grid");
  auto* export_cmd = app.add_subcommand("export", "Regenerate CSV exports from results.csv");

  for (auto* sub : {synth, ingest, featurize, train_cmd, augment, evaluate, sweep, export_cmd})
    sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(args, synth_spec);
    if (ingest->parsed()) return cmd_ingest(args);
    if (featurize->parsed()) return cmd_featurize(args);
    if (train_cmd->parsed()) return cmd_train(args);
    if (augment->parsed()) return cmd_augment(args);
    if (evaluate->parsed()) return cmd_evaluate(args, model_path, snr_token);
    if (sweep->parsed()) return cmd_sweep(args);
    if (export_cmd->parsed()) return cmd_export(args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
