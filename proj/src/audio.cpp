// SPDX-License-Identifier: Apache-2.0
#include "qasc/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "qasc/rng.hpp"

namespace qasc::audio {

namespace {

constexpr double kTwoPi = 6.28318530717958647692528676655900577;
// Nonnegative refinement steps applied to the clamped pseudo-inverse
// estimate; the update is multiplicative, so convergence is monotone.
constexpr int kMelRefineIters = 50;

using complexd = std::complex<double>;

// Iterative radix-2 Cooley-Tukey; n must be a power of two. Unnormalized
// forward transform; inverse scales by 1/n.
void fft_inplace(std::vector<complexd>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
    const complexd wl{std::cos(ang), std::sin(ang)};
    for (std::size_t i = 0; i < n; i += len) {
      complexd w{1.0, 0.0};
      for (std::size_t k = 0; k < len / 2; ++k) {
        const complexd u = a[i + k];
        const complexd v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}

void validate_frame_params(int n_fft, int hop) {
  if (n_fft < 4 || !std::has_single_bit(static_cast<unsigned>(n_fft)))
    throw std::invalid_argument("stft: n_fft must be a power of two >= 4");
  if (hop < 1 || hop > n_fft) throw std::invalid_argument("stft: hop must be in [1, n_fft]");
}

}  // namespace

std::vector<double> hann_window(int n) {
  if (n < 1) throw std::invalid_argument("hann_window: length must be positive");
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(kTwoPi * i / n));
  return w;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Spectrogram stft(const Waveform& wave, int n_fft, int hop) {
  validate_frame_params(n_fft, hop);
  const std::size_t len = wave.samples.size();
  if (len < static_cast<std::size_t>(n_fft))
    throw std::invalid_argument("stft: audio shorter than one analysis frame");
  const std::size_t n_frames = (len - n_fft) / hop + 1;
  const std::vector<double> window = hann_window(n_fft);
  const std::size_t n_bins = static_cast<std::size_t>(n_fft) / 2 + 1;

  Spectrogram out;
  out.n_fft = n_fft;
  out.hop = hop;
  out.frames.resize(n_frames);
  std::vector<complexd> buf(static_cast<std::size_t>(n_fft));
  for (std::size_t f = 0; f < n_frames; ++f) {
    const double* x = wave.samples.data() + f * hop;
    for (int i = 0; i < n_fft; ++i) buf[i] = complexd{x[i] * window[i], 0.0};
    fft_inplace(buf, false);
    out.frames[f].assign(buf.begin(), buf.begin() + n_bins);
  }
  return out;
}

Waveform istft(const Spectrogram& spec, int sample_rate) {
  validate_frame_params(spec.n_fft, spec.hop);
  if (spec.frames.empty()) throw std::invalid_argument("istft: empty spectrogram");
  const std::size_t n_bins = static_cast<std::size_t>(spec.n_fft) / 2 + 1;
  for (const auto& fr : spec.frames)
    if (fr.size() != n_bins) throw std::invalid_argument("istft: inconsistent bin count");

  const int n_fft = spec.n_fft;
  const int hop = spec.hop;
  const std::vector<double> window = hann_window(n_fft);
  const std::size_t out_len =
      (spec.n_frames() - 1) * static_cast<std::size_t>(hop) + static_cast<std::size_t>(n_fft);
  std::vector<double> acc(out_len, 0.0);
  std::vector<double> wsum(out_len, 0.0);
  std::vector<complexd> buf(static_cast<std::size_t>(n_fft));
  for (std::size_t f = 0; f < spec.n_frames(); ++f) {
    // Rebuild the full spectrum from the one-sided half by conjugate symmetry.
    for (std::size_t k = 0; k < n_bins; ++k) buf[k] = spec.frames[f][k];
    for (std::size_t k = n_bins; k < static_cast<std::size_t>(n_fft); ++k)
      buf[k] = std::conj(spec.frames[f][static_cast<std::size_t>(n_fft) - k]);
    fft_inplace(buf, true);
    const std::size_t base = f * hop;
    for (int i = 0; i < n_fft; ++i) {
      acc[base + i] += window[i] * buf[i].real();
      wsum[base + i] += window[i] * window[i];
    }
  }
  Waveform out;
  out.sample_rate = sample_rate;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i)
    out.samples[i] = wsum[i] > 1e-12 ? acc[i] / wsum[i] : 0.0;
  return out;
}

linalg::Matrix mel_filterbank(int n_fft, int n_mels, int sample_rate) {
  if (n_mels < 2) throw std::invalid_argument("mel_filterbank: n_mels must be >= 2");
  if (sample_rate < 1) throw std::invalid_argument("mel_filterbank: bad sample rate");
  const int n_bins = n_fft / 2 + 1;
  if (n_mels > n_bins)
    throw std::invalid_argument("mel_filterbank: n_mels exceeds the number of frequency bins");

  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> points(static_cast<std::size_t>(n_mels) + 2);
  for (int m = 0; m < n_mels + 2; ++m) points[m] = mel_to_hz(mel_max * m / (n_mels + 1));

  linalg::Matrix fb(static_cast<std::size_t>(n_mels), static_cast<std::size_t>(n_bins));
  for (int m = 0; m < n_mels; ++m) {
    const double lo = points[m], center = points[m + 1], hi = points[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      double w = 0.0;
      if (f > lo && f < center) {
        w = (f - lo) / (center - lo);
      } else if (f >= center && f < hi) {
        w = (hi - f) / (hi - center);
      }
      fb.at(m, k) = w;
    }
  }
  return fb;
}

std::vector<MelPatch> extract_patches(const Waveform& wave, int p, int n_fft, int hop) {
  if (p < 2) throw std::invalid_argument("extract_patches: patch size must be >= 2");
  const Spectrogram spec = stft(wave, n_fft, hop);
  const linalg::Matrix fb = mel_filterbank(n_fft, p, wave.sample_rate);
  const std::size_t n_bins = spec.n_bins();
  const std::size_t n_patches = spec.n_frames() / static_cast<std::size_t>(p);

  std::vector<double> power(n_bins);
  std::vector<MelPatch> patches(n_patches);
  for (std::size_t pi = 0; pi < n_patches; ++pi) {
    MelPatch& patch = patches[pi];
    patch.size = p;
    patch.values.assign(static_cast<std::size_t>(p) * p, 0.0);
    for (int t = 0; t < p; ++t) {
      const auto& frame = spec.frames[pi * p + t];
      for (std::size_t k = 0; k < n_bins; ++k) power[k] = std::norm(frame[k]);
      const std::vector<double> mel = linalg::matvec(fb, power);
      for (int m = 0; m < p; ++m) patch.at(m, t) = std::log(mel[m] + kLogEps);
    }
  }
  return patches;
}

Waveform add_noise_at_snr(const Waveform& wave, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return wave;
  if (wave.samples.empty()) throw std::invalid_argument("add_noise_at_snr: empty signal");
  double p_signal = 0.0;
  for (double s : wave.samples) p_signal += s * s;
  p_signal /= static_cast<double>(wave.samples.size());
  if (p_signal <= 0.0)
    throw std::invalid_argument("add_noise_at_snr: zero-power signal, SNR undefined");

  util::Rng rng(seed);
  std::vector<double> noise(wave.samples.size());
  double p_noise = 0.0;
  for (auto& n : noise) {
    n = rng.gaussian();
    p_noise += n * n;
  }
  p_noise /= static_cast<double>(noise.size());
  // Scale the realized draw so measured SNR hits the target exactly.
  const double target = p_signal / std::pow(10.0, snr_db / 10.0);
  const double g = std::sqrt(target / p_noise);

  Waveform out = wave;
  for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += g * noise[i];
  return out;
}

Waveform invert_mel_patch(const MelPatch& patch, const linalg::Matrix& fb, int hop,
                          int sample_rate, int n_iters, std::uint64_t seed) {
  if (patch.size < 2 || patch.values.size() != static_cast<std::size_t>(patch.size) * patch.size)
    throw std::invalid_argument("invert_mel_patch: malformed patch");
  if (fb.rows != static_cast<std::size_t>(patch.size))
    throw std::invalid_argument("invert_mel_patch: filterbank row count != patch size");
  if (n_iters < 0) throw std::invalid_argument("invert_mel_patch: negative iteration count");
  const int n_fft = 2 * (static_cast<int>(fb.cols) - 1);
  validate_frame_params(n_fft, hop);

  const int p = patch.size;
  // Right pseudo-inverse through the (ridge-stabilized) Gram matrix:
  // s = F^T (F F^T)^-1 m, then clamp to the physical range.
  linalg::Matrix g = linalg::gram(fb);
  for (std::size_t i = 0; i < g.rows; ++i) g.at(i, i) += 1e-12;
  const linalg::Matrix chol = linalg::cholesky(std::move(g));

  std::vector<std::vector<double>> mags(static_cast<std::size_t>(p));
  std::vector<double> mel(static_cast<std::size_t>(p));
  for (int t = 0; t < p; ++t) {
    for (int m = 0; m < p; ++m) mel[m] = std::max(std::exp(patch.at(m, t)) - kLogEps, 0.0);
    const std::vector<double> y = linalg::cholesky_solve(chol, mel);
    std::vector<double> power = linalg::matvec_t(fb, y);
    for (auto& v : power) v = std::max(v, 0.0);
    // Clamping discards the pseudo-inverse's negative lobes and inflates
    // quiet bands. Multiplicative updates restore consistency with the
    // measured mel energies while keeping every bin nonnegative.
    const std::vector<double> target = linalg::matvec_t(fb, mel);
    for (int it = 0; it < kMelRefineIters; ++it) {
      const std::vector<double> projected = linalg::matvec(fb, power);
      const std::vector<double> denom = linalg::matvec_t(fb, projected);
      for (std::size_t k = 0; k < power.size(); ++k)
        power[k] *= target[k] / (denom[k] + 1e-30);
    }
    auto& mag = mags[t];
    mag.resize(power.size());
    for (std::size_t k = 0; k < power.size(); ++k) mag[k] = std::sqrt(power[k]);
  }

  // Griffin-Lim with fixed magnitudes and seeded random initial phases.
  util::Rng rng(seed);
  const std::size_t n_bins = fb.cols;
  Spectrogram spec;
  spec.n_fft = n_fft;
  spec.hop = hop;
  spec.frames.assign(static_cast<std::size_t>(p), std::vector<complexd>(n_bins));
  for (int t = 0; t < p; ++t) {
    for (std::size_t k = 0; k < n_bins; ++k) {
      // DC and Nyquist stay real for a real synthesis signal.
      const double phase = (k == 0 || k == n_bins - 1) ? 0.0 : rng.uniform(0.0, kTwoPi);
      spec.frames[t][k] = std::polar(mags[t][k], phase);
    }
  }
  for (int it = 0; it < n_iters; ++it) {
    const Waveform x = istft(spec, sample_rate);
    const Spectrogram est = stft(x, n_fft, hop);
    for (int t = 0; t < p; ++t) {
      for (std::size_t k = 0; k < n_bins; ++k) {
        const complexd e = est.frames[t][k];
        const double a = std::abs(e);
        const complexd phase = a > 1e-300 ? e / a : complexd{1.0, 0.0};
        spec.frames[t][k] = mags[t][k] * phase;
      }
    }
  }
  return istft(spec, sample_rate);
}

}  // namespace qasc::audio
