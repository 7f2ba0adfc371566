// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include "qasc/linalg.hpp"

namespace qasc::audio {

struct Waveform {
  std::vector<double> samples;  // mono, nominally in [-1, 1]
  int sample_rate = 0;
};

// One-sided STFT: frames[f][k], k in [0, n_fft/2], Hann analysis window,
// frame f covering samples [f*hop, f*hop + n_fft). No padding or centering:
// frame count = floor((len - n_fft) / hop) + 1.
struct Spectrogram {
  std::vector<std::vector<std::complex<double>>> frames;
  int n_fft = 0;
  int hop = 0;

  std::size_t n_frames() const { return frames.size(); }
  std::size_t n_bins() const { return frames.empty() ? 0 : frames[0].size(); }
};

// p x p patch of log-mel energies, row = mel band, column = time frame.
struct MelPatch {
  int size = 0;
  std::vector<double> values;  // row-major, size*size

  double& at(int mel, int frame) { return values[static_cast<std::size_t>(mel) * size + frame]; }
  double at(int mel, int frame) const {
    return values[static_cast<std::size_t>(mel) * size + frame];
  }
};

// Additive floor inside the log when building patches: log(mel_energy + eps).
inline constexpr double kLogEps = 1e-10;

// Sentinel for "no noise" in SNR sweeps.
inline constexpr double kCleanSnr = std::numeric_limits<double>::infinity();

// Periodic Hann window of length n: 0.5 * (1 - cos(2*pi*i/n)).
std::vector<double> hann_window(int n);

double hz_to_mel(double hz);   // 2595 * log10(1 + hz/700)
double mel_to_hz(double mel);

Spectrogram stft(const Waveform& wave, int n_fft, int hop);

// Weighted overlap-add inverse with the same Hann window; exact on interior
// samples when the spectrogram carries true phases. Output length is
// (n_frames - 1) * hop + n_fft.
Waveform istft(const Spectrogram& spec, int sample_rate);

// Triangular filters with peaks equally spaced on the mel scale over
// [0, sample_rate/2]; n_mels x (n_fft/2 + 1), unit peak height.
linalg::Matrix mel_filterbank(int n_fft, int n_mels, int sample_rate);

// Full feature path: STFT -> power -> mel (n_mels = p) -> log(. + eps) ->
// non-overlapping groups of p frames. Trailing frames that do not fill a
// patch are dropped.
std::vector<MelPatch> extract_patches(const Waveform& wave, int p, int n_fft, int hop);

// Adds white Gaussian noise scaled so the realized SNR equals snr_db exactly;
// the scale factor is deterministic per (wave, seed). snr_db = kCleanSnr
// returns the input unchanged. Throws on zero-power input (SNR undefined).
Waveform add_noise_at_snr(const Waveform& wave, double snr_db, std::uint64_t seed);

// Inverts a log-mel patch to audio: exp -> clamped filterbank pseudo-inverse
// -> magnitude spectrogram -> Griffin-Lim (n_iters phase refinements, random
// seeded initial phases) -> overlap-add. Output length (p-1)*hop + n_fft.
Waveform invert_mel_patch(const MelPatch& patch, const linalg::Matrix& fb, int hop,
                          int sample_rate, int n_iters, std::uint64_t seed);

}  // namespace qasc::audio
