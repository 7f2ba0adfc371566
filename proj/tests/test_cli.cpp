// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "qasc/audio.hpp"
#include "qasc/config.hpp"
#include "qasc/experiment.hpp"
#include "qasc/manifest.hpp"
#include "qasc/synth.hpp"
#include "qasc/wav_io.hpp"

using namespace qasc;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("qasc_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

template <typename F>
std::string thrown_message(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "<no exception>";
}

bool mentions(const std::string& message, const std::string& needle) {
  return message.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("config parsing fills documented defaults") {
  const auto cfg = cli::parse_config("[paths]\nlabels_file = meta.txt\n", "cfg");
  CHECK(cfg.model.n_qubits == 4);
  CHECK(cfg.model.n_layers == 3);
  CHECK(cfg.model.encoding == qit::EncodingMode::Amplitude);
  CHECK(cfg.model.pooling == qit::PoolingMode::Max);
  CHECK_FALSE(cfg.model.use_qvae);
  CHECK(cfg.model.patch_size == 32);
  CHECK(cfg.model.n_classes == 0);
  CHECK(cfg.audio.sample_rate == 16000);
  CHECK(cfg.audio.n_fft == 512);
  CHECK(cfg.audio.hop == 128);
  CHECK(cfg.train.learning_rate == doctest::Approx(0.001));
  CHECK(cfg.train.scheduler_factor == doctest::Approx(0.5));
  CHECK(cfg.train.scheduler_patience == 10);
  CHECK(cfg.train.early_stop_patience == 5);
  REQUIRE(cfg.sweep.snr_list.size() == 1);
  CHECK(std::isinf(cfg.sweep.snr_list[0]));
  REQUIRE(cfg.sweep.fraction_list.size() == 1);
  CHECK(cfg.sweep.fraction_list[0] == doctest::Approx(1.0));
  CHECK(cfg.sweep.variants.empty());
  CHECK_FALSE(cfg.sweep.deterministic_timing);
  CHECK(cfg.paths.labels_file == "meta.txt");
  CHECK(cfg.paths.output_dir == "out");
  CHECK(cfg.seed == 0);
}

TEST_CASE("config errors name the offending line") {
  CHECK(mentions(thrown_message([] { cli::parse_config("[nope]\n", "cfg"); }),
                 "cfg:1: unknown section [nope]"));
  CHECK(mentions(thrown_message([] {
          cli::parse_config("[model]\nn_qubits = 4\nwidgets = 9\n", "cfg");
        }),
        "cfg:3: unknown [model] key 'widgets'"));
  CHECK(mentions(thrown_message([] {
          cli::parse_config("[model]\nn_qubits = 4\nn_qubits = 5\n", "cfg");
        }),
        "cfg:3: duplicate key 'n_qubits'"));
  CHECK(mentions(thrown_message([] { cli::parse_config("lr 0.1\n", "cfg"); }),
                 "cfg:1: expected 'key = value'"));
  CHECK(mentions(thrown_message([] { cli::parse_config("[train]\nlearning_rate = fast\n", "cfg"); }),
                 "cfg:2"));
  CHECK(mentions(thrown_message([] { cli::parse_config("volume = 11\n", "cfg"); }),
                 "cfg:1: unknown top-level key 'volume'"));
  CHECK(mentions(thrown_message([] {
          cli::parse_config("[sweep]\nfraction_list = 0.5, 1.5\n", "cfg");
        }),
        "fraction must lie in (0, 1]"));
  CHECK(mentions(thrown_message([] {
          cli::parse_config("[sweep]\nvariants = qvae, qvae\n", "cfg");
        }),
        "duplicate variant 'qvae'"));
  CHECK(mentions(thrown_message([] {
          cli::parse_config("[sweep]\nvariants = resnet\n", "cfg");
        }),
        "unknown variant 'resnet'"));
}

TEST_CASE("snr tokens cover clean sentinels and decibel values") {
  const auto cfg =
      cli::parse_config("[sweep]\nsnr_list = 5, 10.5, clean, inf\n", "cfg");
  REQUIRE(cfg.sweep.snr_list.size() == 4);
  CHECK(cfg.sweep.snr_list[0] == doctest::Approx(5.0));
  CHECK(cfg.sweep.snr_list[1] == doctest::Approx(10.5));
  CHECK(std::isinf(cfg.sweep.snr_list[2]));
  CHECK(std::isinf(cfg.sweep.snr_list[3]));
}

TEST_CASE("comments and top-level seed parse") {
  const auto cfg = cli::parse_config(
      "# experiment seed\nseed = 99\n[model]\nn_qubits = 6  # wide register\n", "cfg");
  CHECK(cfg.seed == 99);
  CHECK(cfg.model.n_qubits == 6);
}

TEST_CASE("variant expansion reproduces the benchmark grid") {
  auto cfg = cli::parse_config(
      "[sweep]\nvariants = baseline, qvae, qubits6, layers5, angle, avgpool\n", "cfg");
  const auto blocks = cli::expand_variants(cfg);
  REQUIRE(blocks.size() == 6);
  std::vector<std::string> ids;
  ids.reserve(blocks.size());
  for (const auto& b : blocks) ids.push_back(cli::config_id(b));
  const std::vector<std::string> expected = {
      "q4_l3_amp_max",      "q4_l3_amp_max_qvae", "q6_l3_amp_max_qvae",
      "q4_l5_amp_max_qvae", "q4_l3_ang_max_qvae", "q4_l3_amp_mean_qvae"};
  CHECK(ids == expected);
  for (std::size_t i = 1; i < blocks.size(); ++i) CHECK(blocks[i].use_qvae);
  CHECK_FALSE(blocks[0].use_qvae);

  cfg.sweep.variants.clear();
  const auto plain = cli::expand_variants(cfg);
  REQUIRE(plain.size() == 1);
  CHECK(cli::config_id(plain[0]) == "q4_l3_amp_max");
}

TEST_CASE("augmentation demands a register wider than the latent circuit") {
  CHECK(mentions(thrown_message([] {
          cli::parse_config("[model]\nn_qubits = 3\n[sweep]\nvariants = qvae\n", "cfg");
        }),
        "n_qubits"));
}

TEST_CASE("manifest ingest orders classes and validates lines") {
  const fs::path dir = fresh_dir("manifest");
  for (const char* name : {"b.wav", "a.wav", "c.wav"}) write_file(dir / name, "x");

  write_file(dir / "meta.txt", "b.wav\tzebra\na.wav\tapple\nc.wav\tmango\n");
  const auto m = cli::ingest((dir / "meta.txt").string());
  REQUIRE(m.entries.size() == 3);
  CHECK(m.class_names == std::vector<std::string>({"apple", "mango", "zebra"}));
  CHECK(m.entries[0].label == 2);
  CHECK(m.entries[1].label == 0);
  CHECK(m.entries[2].label == 1);
  CHECK_FALSE(m.has_split_tags);
  CHECK(cli::resolve_audio_path(m, m.entries[0]) == (dir / "b.wav").string());

  write_file(dir / "dup.txt", "a.wav\tapple\na.wav\tmango\n");
  CHECK(mentions(thrown_message([&] { cli::ingest((dir / "dup.txt").string()); }), ":2:"));

  write_file(dir / "bad.txt", "a.wav\n");
  CHECK(mentions(thrown_message([&] { cli::ingest((dir / "bad.txt").string()); }),
                 "expected 2 or 3 tab-separated fields"));

  write_file(dir / "ghost.txt", "missing.wav\tapple\n");
  CHECK(mentions(thrown_message([&] { cli::ingest((dir / "ghost.txt").string()); }),
                 "not found"));

  write_file(dir / "mixed.txt", "a.wav\tapple\ttrain\nb.wav\tapple\n");
  CHECK(mentions(thrown_message([&] { cli::ingest((dir / "mixed.txt").string()); }),
                 "all lines or none"));

  write_file(dir / "tags.txt", "a.wav\tapple\ttrain\nb.wav\tapple\ttest\nc.wav\tmango\ttrain\n");
  const auto tagged = cli::ingest((dir / "tags.txt").string());
  CHECK(tagged.has_split_tags);
  CHECK(tagged.entries[0].split == "train");
  CHECK(tagged.entries[1].split == "test");

  write_file(dir / "badtag.txt", "a.wav\tapple\tvalidation\n");
  CHECK(mentions(thrown_message([&] { cli::ingest((dir / "badtag.txt").string()); }),
                 "split tag must be 'train' or 'test'"));
}

TEST_CASE("synthetic corpus is deterministic and ingestible") {
  const fs::path dir = fresh_dir("synth");
  cli::SynthSpec spec;
  spec.clips_per_class = 3;
  spec.duration_s = 0.25;
  spec.sample_rate = 8000;

  const std::string m1 = cli::synth_corpus((dir / "one").string(), spec, 7);
  const std::string m2 = cli::synth_corpus((dir / "two").string(), spec, 7);
  const std::string m3 = cli::synth_corpus((dir / "three").string(), spec, 8);

  CHECK(read_file(m1) == read_file(m2));
  const auto names = cli::synth_class_names();
  REQUIRE(names.size() == 3);
  const fs::path sample = fs::path(dir) / "one" / "audio" / (names[0] + "_000.wav");
  const fs::path sample2 = fs::path(dir) / "two" / "audio" / (names[0] + "_000.wav");
  const fs::path sample3 = fs::path(dir) / "three" / "audio" / (names[0] + "_000.wav");
  CHECK(read_file(sample) == read_file(sample2));
  CHECK(read_file(sample) != read_file(sample3));

  const auto manifest = cli::ingest(m1);
  CHECK(manifest.entries.size() == 9);
  std::vector<std::string> sorted_names = names;
  std::sort(sorted_names.begin(), sorted_names.end());
  CHECK(manifest.class_names == sorted_names);
}

TEST_CASE("results export round-trips rows and pivots accuracies") {
  const fs::path dir = fresh_dir("export");
  const double clean = audio::kCleanSnr;
  std::vector<cli::ResultRow> rows;
  auto push = [&rows](const std::string& id, double snr, double frac, double acc) {
    cli::ResultRow r;
    r.config = id;
    r.snr_db = snr;
    r.fraction = frac;
    r.accuracy = acc;
    r.precision = acc;
    r.recall = acc;
    r.f1 = acc;
    r.seconds = 1.25;
    rows.push_back(r);
  };
  push("q4_l3_amp_max", 10.0, 1.0, 0.9);
  push("q4_l3_amp_max", clean, 1.0, 0.95);
  push("q4_l3_amp_max", 5.0, 1.0, 0.85);
  cli::ResultRow failed;
  failed.config = "q6_l3_amp_max_qvae";
  failed.snr_db = 5.0;
  failed.fraction = 0.5;
  failed.accuracy = std::numeric_limits<double>::quiet_NaN();
  failed.precision = failed.recall = failed.f1 = failed.accuracy;
  failed.failed = true;
  rows.push_back(failed);

  cli::export_results(rows, dir.string());

  const std::string csv = read_file(dir / "results.csv");
  CHECK(mentions(csv, "config,snr_db,fraction,accuracy,precision,recall,f1,seconds"));
  CHECK(mentions(csv, "q4_l3_amp_max,clean,1.000000,0.950000"));
  CHECK(mentions(csv, "q6_l3_amp_max_qvae,5.000000,0.500000,nan"));

  const auto back = cli::read_results_csv((dir / "results.csv").string());
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].config == rows[i].config);
    if (std::isinf(rows[i].snr_db)) {
      CHECK(std::isinf(back[i].snr_db));
    } else {
      CHECK(back[i].snr_db == doctest::Approx(rows[i].snr_db));
    }
    if (rows[i].failed) {
      CHECK(back[i].failed);
      CHECK(std::isnan(back[i].accuracy));
    } else {
      CHECK(back[i].accuracy == doctest::Approx(rows[i].accuracy).epsilon(1e-9));
    }
  }

  // Re-export from the parsed rows: byte-identical CSV (6-decimal format).
  cli::export_results(back, (dir / "second").string());
  CHECK(read_file(dir / "results.csv") == read_file(dir / "second" / "results.csv"));

  const std::string pivot = read_file(dir / "metrics_by_config.csv");
  CHECK(mentions(pivot, "config,fraction,clean,snr_5db,snr_10db"));
  CHECK(mentions(pivot, "q4_l3_amp_max,1.000000,0.950000,0.850000,0.900000"));

  cli::export_results({}, (dir / "empty").string());
  CHECK(read_file(dir / "empty" / "results.csv") ==
        "config,snr_db,fraction,accuracy,precision,recall,f1,seconds\n");
}

TEST_CASE("stratified subsample keeps the class mix") {
  std::vector<int> pool;
  std::vector<int> labels;
  for (int i = 0; i < 100; ++i) {
    pool.push_back(i);
    labels.push_back(i < 50 ? 0 : 1);
  }
  const auto picked = cli::stratified_subsample(pool, labels, 0.1, 123);
  REQUIRE(picked.size() == 10);
  int per_class[2] = {0, 0};
  for (int idx : picked) ++per_class[labels[idx]];
  CHECK(per_class[0] == 5);
  CHECK(per_class[1] == 5);

  CHECK(cli::stratified_subsample(pool, labels, 0.1, 123) == picked);
  CHECK(cli::stratified_subsample(pool, labels, 0.1, 124) != picked);
  CHECK(cli::stratified_subsample(pool, labels, 1.0, 5).size() == pool.size());

  // A vanishing fraction still keeps one clip per class.
  const auto tiny = cli::stratified_subsample(pool, labels, 0.001, 9);
  REQUIRE(tiny.size() == 2);
  CHECK(labels[tiny[0]] != labels[tiny[1]]);
}

TEST_CASE("dataset loading splits 70/30 per class without tags") {
  const fs::path dir = fresh_dir("load");
  cli::SynthSpec spec;
  spec.clips_per_class = 4;
  spec.duration_s = 0.2;
  spec.sample_rate = 8000;
  const std::string manifest = cli::synth_corpus(dir.string(), spec, 21);

  cli::ExperimentConfig cfg;
  cfg.paths.labels_file = manifest;
  cfg.audio.sample_rate = 8000;
  cfg.seed = 5;
  const auto data = cli::load_dataset(cfg);
  CHECK(data.n_classes == 3);
  CHECK(data.clips.size() == 12);
  CHECK(data.train_indices.size() == 9);
  CHECK(data.test_indices.size() == 3);
  int train_per_class[3] = {0, 0, 0};
  for (int idx : data.train_indices) ++train_per_class[data.labels[idx]];
  for (int c = 0; c < 3; ++c) CHECK(train_per_class[c] == 3);

  const auto again = cli::load_dataset(cfg);
  CHECK(again.train_indices == data.train_indices);
}

TEST_CASE("dataset loading honors explicit split tags") {
  const fs::path dir = fresh_dir("loadtags");
  for (const char* name : {"p.wav", "q.wav"}) {
    audio::Waveform w;
    w.sample_rate = 8000;
    w.samples.assign(1600, 0.01);
    audio::write_wav_pcm16((dir / name).string(), w);
  }
  write_file(dir / "meta.txt", "p.wav\tone\ttrain\nq.wav\ttwo\ttest\n");

  cli::ExperimentConfig cfg;
  cfg.paths.labels_file = (dir / "meta.txt").string();
  cfg.audio.sample_rate = 8000;
  const auto data = cli::load_dataset(cfg);
  REQUIRE(data.train_indices.size() == 1);
  REQUIRE(data.test_indices.size() == 1);
  CHECK(data.class_names[data.labels[data.train_indices[0]]] == "one");
  CHECK(data.class_names[data.labels[data.test_indices[0]]] == "two");
}

TEST_CASE("experiment grid isolates failing cells") {
  const fs::path dir = fresh_dir("grid");
  cli::SynthSpec spec;
  spec.clips_per_class = 4;
  spec.duration_s = 0.2;
  spec.sample_rate = 8000;
  const std::string manifest = cli::synth_corpus(dir.string(), spec, 33);

  cli::ExperimentConfig cfg;
  cfg.paths.labels_file = manifest;
  cfg.audio.sample_rate = 8000;
  cfg.audio.n_fft = 64;
  cfg.audio.hop = 32;
  cfg.model.patch_size = 4;
  cfg.model.n_qubits = 2;
  cfg.model.n_layers = 1;
  cfg.train.max_epochs = 1;
  cfg.train.batch_size = 4;
  cfg.sweep.snr_list = {audio::kCleanSnr, 10.0};
  cfg.sweep.fraction_list = {1.0};
  cfg.sweep.deterministic_timing = true;
  cfg.seed = 17;

  const auto rows = cli::run_experiment(cfg);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK_FALSE(r.failed);
    CHECK(r.config == "q2_l1_amp_max");
    CHECK(r.seconds == 0.0);
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
  }

  // A patch wider than the clip's frame count cannot featurize: the cell
  // fails, the grid continues, and the row records the error.
  cfg.model.patch_size = 64;
  const auto failed_rows = cli::run_experiment(cfg);
  REQUIRE(failed_rows.size() == 2);
  for (const auto& r : failed_rows) {
    CHECK(r.failed);
    CHECK(std::isnan(r.accuracy));
    CHECK_FALSE(r.error.empty());
  }
}

TEST_CASE("grid cells are deterministic per seed") {
  const fs::path dir = fresh_dir("det");
  cli::SynthSpec spec;
  spec.clips_per_class = 4;
  spec.duration_s = 0.2;
  spec.sample_rate = 8000;
  const std::string manifest = cli::synth_corpus(dir.string(), spec, 2);

  cli::ExperimentConfig cfg;
  cfg.paths.labels_file = manifest;
  cfg.audio.sample_rate = 8000;
  cfg.audio.n_fft = 64;
  cfg.audio.hop = 32;
  cfg.model.patch_size = 4;
  cfg.model.n_qubits = 2;
  cfg.model.n_layers = 1;
  cfg.train.max_epochs = 2;
  cfg.train.batch_size = 4;
  cfg.sweep.snr_list = {5.0};
  cfg.sweep.deterministic_timing = true;
  cfg.seed = 9;

  const auto a = cli::run_experiment(cfg);
  const auto b = cli::run_experiment(cfg);
  REQUIRE(a.size() == 1);
  REQUIRE(b.size() == 1);
  CHECK(a[0].accuracy == b[0].accuracy);
  CHECK(a[0].f1 == b[0].f1);
}
