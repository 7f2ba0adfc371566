// SPDX-License-Identifier: Apache-2.0
#include "qasc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "qasc/audio.hpp"
#include "qasc/rng.hpp"
#include "qasc/wav_io.hpp"

namespace fs = std::filesystem;

namespace qasc::cli {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Low engine rumble: stacked harmonics of a detuned ~110 Hz fundamental with
// a slow tremolo.
void render_engine(std::vector<double>& x, int sr, util::Rng& rng) {
  const double f0 = 110.0 * (1.0 + 0.03 * rng.uniform(-1.0, 1.0));
  const double trem_rate = rng.uniform(4.5, 7.0);
  const double phase0 = rng.uniform(0.0, kTwoPi);
  double amps[4];
  for (int k = 0; k < 4; ++k) amps[k] = (0.8 / (k + 1)) * (1.0 + 0.2 * rng.uniform(-1.0, 1.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / sr;
    const double trem = 1.0 + 0.3 * std::sin(kTwoPi * trem_rate * t);
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += amps[k] * std::sin(kTwoPi * f0 * (k + 1) * t + phase0 * (k + 1));
    x[i] += trem * s;
  }
}

// Mid-band siren: ~900 Hz carrier with slow frequency modulation plus a
// weaker octave partial.
void render_siren(std::vector<double>& x, int sr, util::Rng& rng) {
  const double f0 = 900.0 * (1.0 + 0.03 * rng.uniform(-1.0, 1.0));
  const double fm_rate = rng.uniform(1.0, 1.8);
  const double fm_depth = 0.12;
  const double phase0 = rng.uniform(0.0, kTwoPi);
  double phase = phase0;
  double phase2 = 2.0 * phase0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / sr;
    const double f = f0 * (1.0 + fm_depth * std::sin(kTwoPi * fm_rate * t));
    phase += kTwoPi * f / sr;
    phase2 += kTwoPi * 2.0 * f / sr;
    x[i] += std::sin(phase) + 0.4 * std::sin(phase2);
  }
}

// High-band ticking: two detuned high partials gated by a duty-cycled burst
// envelope.
void render_tick(std::vector<double>& x, int sr, util::Rng& rng) {
  const double f1 = 3600.0 * (1.0 + 0.02 * rng.uniform(-1.0, 1.0));
  const double f2 = 5200.0 * (1.0 + 0.02 * rng.uniform(-1.0, 1.0));
  const double burst_rate = rng.uniform(6.0, 9.0);
  const double duty = rng.uniform(0.25, 0.4);
  const double phase0 = rng.uniform(0.0, kTwoPi);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / sr;
    const double cycle = t * burst_rate - std::floor(t * burst_rate);
    const double gate = cycle < duty ? 1.0 : 0.05;
    x[i] += gate * (std::sin(kTwoPi * f1 * t + phase0) + 0.6 * std::sin(kTwoPi * f2 * t));
  }
}

audio::Waveform render_clip(int class_idx, const SynthSpec& spec, std::uint64_t clip_seed) {
  util::Rng rng(clip_seed);
  const int n = static_cast<int>(std::lround(spec.duration_s * spec.sample_rate));
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  switch (class_idx) {
    case 0: render_engine(x, spec.sample_rate, rng); break;
    case 1: render_siren(x, spec.sample_rate, rng); break;
    default: render_tick(x, spec.sample_rate, rng); break;
  }

  const double bed = rng.uniform(0.008, 0.02);
  for (double& v : x) v += bed * rng.gaussian();

  const double gain = rng.uniform(0.35, 0.55);
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  const double scale = peak > 0.0 ? std::min(gain, 0.9 / peak) : gain;
  for (double& v : x) v *= scale;

  audio::Waveform wave;
  wave.samples = std::move(x);
  wave.sample_rate = spec.sample_rate;
  return wave;
}

}  // namespace

std::vector<std::string> synth_class_names() { return {"engine", "siren", "tick"}; }

std::string synth_corpus(const std::string& out_dir, const SynthSpec& spec, std::uint64_t seed) {
  if (spec.clips_per_class < 1) throw std::invalid_argument("synth: clips_per_class must be >= 1");
  if (spec.sample_rate < 1000) throw std::invalid_argument("synth: sample_rate must be >= 1000");
  if (!(spec.duration_s > 0.0)) throw std::invalid_argument("synth: duration_s must be positive");

  const fs::path root(out_dir);
  fs::create_directories(root / "audio");

  const std::vector<std::string> classes = synth_class_names();
  std::ofstream meta(root / "meta.txt");
  if (!meta) throw std::runtime_error("synth: cannot write manifest in " + out_dir);

  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (int i = 0; i < spec.clips_per_class; ++i) {
      const std::uint64_t clip_seed =
          util::hash_combine(seed, static_cast<std::uint64_t>(c) * 100000 + i);
      const audio::Waveform wave = render_clip(static_cast<int>(c), spec, clip_seed);
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%03d.wav", classes[c].c_str(), i);
      audio::write_wav_pcm16((root / "audio" / name).string(), wave);
      meta << "audio/" << name << '\t' << classes[c] << '\n';
    }
  }
  meta.close();
  if (!meta) throw std::runtime_error("synth: manifest write failed in " + out_dir);
  return (root / "meta.txt").string();
}

}  // namespace qasc::cli
