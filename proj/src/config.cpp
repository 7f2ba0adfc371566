// SPDX-License-Identifier: Apache-2.0
#include "qasc/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qasc/audio.hpp"

namespace qasc::cli {

namespace {

[[noreturn]] void fail(const std::string& name, int line, const std::string& what) {
  throw std::runtime_error(name + ":" + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

long long parse_int(const std::string& name, int line, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (errno != 0 || end != v.c_str() + v.size() || v.empty())
    fail(name, line, "expected an integer, got '" + v + "'");
  return x;
}

std::uint64_t parse_u64(const std::string& name, int line, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (errno != 0 || end != v.c_str() + v.size() || v.empty() || v[0] == '-')
    fail(name, line, "expected an unsigned integer, got '" + v + "'");
  return x;
}

double parse_double(const std::string& name, int line, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (errno != 0 || end != v.c_str() + v.size() || v.empty())
    fail(name, line, "expected a number, got '" + v + "'");
  return x;
}

bool parse_bool(const std::string& name, int line, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(name, line, "expected 'true' or 'false', got '" + v + "'");
}

std::vector<std::string> parse_list(const std::string& name, int line, const std::string& v) {
  std::vector<std::string> items;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(name, line, "empty list element");
    items.push_back(item);
  }
  if (items.empty()) fail(name, line, "empty list");
  return items;
}

double parse_snr(const std::string& name, int line, const std::string& v) {
  if (v == "clean" || v == "inf") return audio::kCleanSnr;
  return parse_double(name, line, v);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& name) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;  // empty = top level
  std::set<std::string> seen;
  int line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(name, line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "model" && section != "audio" && section != "train" &&
          section != "sweep" && section != "paths")
        fail(name, line_no, "unknown section [" + section + "]");
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(name, line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(name, line_no, "missing key before '='");
    if (value.empty()) fail(name, line_no, "missing value for '" + key + "'");
    if (!seen.insert(section + "." + key).second)
      fail(name, line_no, "duplicate key '" + key + "'");

    if (section.empty()) {
      if (key == "seed") {
        cfg.seed = parse_u64(name, line_no, value);
      } else {
        fail(name, line_no, "unknown top-level key '" + key + "' (only 'seed')");
      }
    } else if (section == "model") {
      if (key == "n_qubits") {
        cfg.model.n_qubits = static_cast<int>(parse_int(name, line_no, value));
      } else if (key == "n_layers") {
        cfg.model.n_layers = static_cast<int>(parse_int(name, line_no, value));
      } else if (key == "encoding") {
        if (value == "amplitude") {
          cfg.model.encoding = qit::EncodingMode::Amplitude;
        } else if (value == "angle") {
          cfg.model.encoding = qit::EncodingMode::Angle;
        } else {
          fail(name, line_no, "encoding must be 'amplitude' or 'angle'");
        }
      } else if (key == "pooling") {
        if (value == "max") {
          cfg.model.pooling = qit::PoolingMode::Max;
        } else if (value == "mean" || value == "avg") {
          cfg.model.pooling = qit::PoolingMode::Mean;
        } else {
          fail(name, line_no, "pooling must be 'max', 'mean', or 'avg'");
        }
      } else if (key == "use_qvae") {
        cfg.model.use_qvae = parse_bool(name, line_no, value);
      } else if (key == "patch_size") {
        cfg.model.patch_size = static_cast<int>(parse_int(name, line_no, value));
      } else if (key == "n_classes") {
        cfg.model.n_classes = static_cast<int>(parse_int(name, line_no, value));
      } else {
        fail(name, line_no, "unknown [model] key '" + key + "'");
      }
    } else if (section == "audio") {
      if (key == "sample_rate") {
        cfg.audio.sample_rate = static_cast<int>(parse_int(name, line_no, value));
      } else if (key == "n_fft") {
        cfg.audio.n_fft = static_cast<int>(parse_int(name, line_no, value));
      } else if (key == "hop") {
        cfg.audio.hop = static_cast<int>(parse_int(name, line_no, value));
      } else {
        fail(name, line_no, "unknown [audio] key '" + key + "'");
      }
    } else if (section == "train") {
      if (key == "max_epochs") {
        cfg.train.max_epochs = static_cast<int>(parse_int(name, line_no, value));
      } else if (key == "batch_size") {
        cfg.train.batch_size = static_cast<int>(parse_int(name, line_no, value));
      } else if (key == "learning_rate") {
        cfg.train.learning_rate = parse_double(name, line_no, value);
      } else if (key == "scheduler_factor") {
        cfg.train.scheduler_factor = parse_double(name, line_no, value);
      } else if (key == "scheduler_patience") {
        cfg.train.scheduler_patience = static_cast<int>(parse_int(name, line_no, value));
      } else if (key == "early_stop_patience") {
        cfg.train.early_stop_patience = static_cast<int>(parse_int(name, line_no, value));
      } else {
        fail(name, line_no, "unknown [train] key '" + key + "'");
      }
    } else if (section == "sweep") {
      if (key == "snr_list") {
        for (const std::string& item : parse_list(name, line_no, value))
          cfg.sweep.snr_list.push_back(parse_snr(name, line_no, item));
      } else if (key == "fraction_list") {
        for (const std::string& item : parse_list(name, line_no, value)) {
          const double f = parse_double(name, line_no, item);
          if (!(f > 0.0 && f <= 1.0))
            fail(name, line_no, "fraction must lie in (0, 1], got '" + item + "'");
          cfg.sweep.fraction_list.push_back(f);
        }
      } else if (key == "variants") {
        std::set<std::string> used;
        for (std::string item : parse_list(name, line_no, value)) {
          if (item == "meanpool") item = "avgpool";
          if (item != "baseline" && item != "qvae" && item != "qubits6" &&
              item != "layers5" && item != "angle" && item != "avgpool")
            fail(name, line_no, "unknown variant '" + item + "'");
          if (!used.insert(item).second) fail(name, line_no, "duplicate variant '" + item + "'");
          cfg.sweep.variants.push_back(item);
        }
      } else if (key == "deterministic_timing") {
        cfg.sweep.deterministic_timing = parse_bool(name, line_no, value);
      } else {
        fail(name, line_no, "unknown [sweep] key '" + key + "'");
      }
    } else {  // paths
      if (key == "dataset_dir") {
        cfg.paths.dataset_dir = value;
      } else if (key == "labels_file") {
        cfg.paths.labels_file = value;
      } else if (key == "output_dir") {
        cfg.paths.output_dir = value;
      } else {
        fail(name, line_no, "unknown [paths] key '" + key + "'");
      }
    }
  }

  if (cfg.sweep.snr_list.empty()) cfg.sweep.snr_list.push_back(audio::kCleanSnr);
  if (cfg.sweep.fraction_list.empty()) cfg.sweep.fraction_list.push_back(1.0);

  const auto bad = [&name](const std::string& what) {
    throw std::runtime_error(name + ": " + what);
  };
  if (cfg.model.n_qubits < 1 || cfg.model.n_qubits > 16) bad("n_qubits must lie in [1, 16]");
  if (cfg.model.n_layers < 1) bad("n_layers must be >= 1");
  if (cfg.model.patch_size < 2) bad("patch_size must be >= 2");
  if (cfg.model.n_classes < 0) bad("n_classes must be >= 0");
  if (cfg.audio.sample_rate < 1) bad("sample_rate must be positive");
  if (cfg.audio.n_fft < 4) bad("n_fft must be >= 4");
  if (cfg.audio.hop < 1 || cfg.audio.hop > cfg.audio.n_fft)
    bad("hop must lie in [1, n_fft]");
  if (cfg.train.max_epochs < 0) bad("max_epochs must be >= 0");
  if (cfg.train.batch_size < 1) bad("batch_size must be >= 1");
  if (!(cfg.train.learning_rate > 0.0)) bad("learning_rate must be positive");
  if (!(cfg.train.scheduler_factor > 0.0 && cfg.train.scheduler_factor < 1.0))
    bad("scheduler_factor must lie in (0, 1)");
  if (cfg.train.scheduler_patience < 1) bad("scheduler_patience must be >= 1");
  if (cfg.train.early_stop_patience < 1) bad("early_stop_patience must be >= 1");

  for (const ModelBlock& block : expand_variants(cfg)) {
    if (block.use_qvae && block.n_qubits <= 3)
      bad("augmentation needs n_qubits > 3 (config '" + config_id(block) +
          "'): the generator's latent circuit must stay smaller than the model");
    if (block.n_classes > (1 << block.n_qubits))
      bad("n_classes exceeds the 2^n measurement outcomes of config '" + config_id(block) + "'");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string config_id(const ModelBlock& model) {
  std::string id = "q" + std::to_string(model.n_qubits) + "_l" + std::to_string(model.n_layers);
  id += model.encoding == qit::EncodingMode::Amplitude ? "_amp" : "_ang";
  id += model.pooling == qit::PoolingMode::Max ? "_max" : "_mean";
  if (model.use_qvae) id += "_qvae";
  return id;
}

std::vector<ModelBlock> expand_variants(const ExperimentConfig& config) {
  if (config.sweep.variants.empty()) return {config.model};
  std::vector<ModelBlock> blocks;
  for (const std::string& token : config.sweep.variants) {
    ModelBlock block = config.model;
    if (token == "baseline") {
      block.use_qvae = false;
    } else if (token == "qvae") {
      block.use_qvae = true;
    } else if (token == "qubits6") {
      block.n_qubits = 6;
      block.use_qvae = true;
    } else if (token == "layers5") {
      block.n_layers = 5;
      block.use_qvae = true;
    } else if (token == "angle") {
      block.encoding = qit::EncodingMode::Angle;
      block.use_qvae = true;
    } else {  // avgpool
      block.pooling = qit::PoolingMode::Mean;
      block.use_qvae = true;
    }
    blocks.push_back(block);
  }
  return blocks;
}

qit::ModelSpec to_model_spec(const ModelBlock& model, int n_classes) {
  qit::ModelSpec spec;
  spec.n_qubits = model.n_qubits;
  spec.n_layers = model.n_layers;
  spec.encoding = model.encoding;
  spec.pooling = model.pooling;
  spec.n_classes = n_classes;
  spec.patch_size = model.patch_size;
  return spec;
}

}  // namespace qasc::cli
