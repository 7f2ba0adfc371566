// SPDX-License-Identifier: Apache-2.0
#include "qasc/wav_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace qasc::audio {

namespace {

// All multi-byte fields in RIFF/WAVE are little-endian; serialize explicitly
// so the code is byte-order independent.
std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_wav: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

void write_wav(const std::string& path, const Waveform& wave, bool as_float) {
  if (wave.sample_rate < 1) throw std::invalid_argument("write_wav: bad sample rate");
  const std::uint16_t format = as_float ? 3 : 1;
  const std::uint16_t bits = as_float ? 32 : 16;
  const std::uint32_t byte_rate = static_cast<std::uint32_t>(wave.sample_rate) * bits / 8;
  const std::uint32_t data_size = static_cast<std::uint32_t>(wave.samples.size()) * bits / 8;

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format);
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate));
  put_u32(out, byte_rate);
  put_u16(out, static_cast<std::uint16_t>(bits / 8));
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_size);
  if (as_float) {
    for (double s : wave.samples) {
      const float f = static_cast<float>(s);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      put_u32(out, u);
    }
  } else {
    for (double s : wave.samples) {
      // Symmetric with the reader's /32768 so a round trip loses at most
      // half a quantization step.
      const long q = std::lround(std::clamp(s, -1.0, 1.0) * 32768.0);
      const auto v = static_cast<std::int16_t>(std::clamp<long>(q, -32768, 32767));
      put_u16(out, static_cast<std::uint16_t>(v));
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_wav: cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write_wav: short write to " + path);
}

}  // namespace

Waveform read_wav(const std::string& path) {
  const std::vector<unsigned char> bytes = read_file(path);
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("read_wav: " + path + " is not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_size = read_u32(bytes.data() + pos + 4);
    const unsigned char* body = bytes.data() + pos + 8;
    if (pos + 8 + chunk_size > bytes.size())
      throw std::runtime_error("read_wav: truncated chunk in " + path);
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw std::runtime_error("read_wav: malformed fmt chunk in " + path);
      format = read_u16(body);
      channels = read_u16(body + 2);
      sample_rate = read_u32(body + 4);
      bits = read_u16(body + 14);
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      data = body;
      data_size = chunk_size;
    }
    pos += 8 + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }
  if (!data || channels == 0 || sample_rate == 0)
    throw std::runtime_error("read_wav: missing fmt or data chunk in " + path);
  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32)
    throw std::runtime_error("read_wav: unsupported encoding in " + path +
                             " (need 16-bit PCM or 32-bit float)");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t n_frames = data_size / frame_bytes;

  Waveform wave;
  wave.sample_rate = static_cast<int>(sample_rate);
  wave.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const unsigned char* s = data + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        const auto v = static_cast<std::int16_t>(read_u16(s));
        acc += static_cast<double>(v) / 32768.0;
      } else {
        const std::uint32_t u = read_u32(s);
        float f;
        std::memcpy(&f, &u, 4);
        acc += static_cast<double>(f);
      }
    }
    wave.samples[i] = acc / channels;
  }
  return wave;
}

void write_wav_pcm16(const std::string& path, const Waveform& wave) {
  write_wav(path, wave, false);
}

void write_wav_float32(const std::string& path, const Waveform& wave) {
  write_wav(path, wave, true);
}

Waveform resample_linear(const Waveform& wave, int target_rate) {
  if (target_rate < 1) throw std::invalid_argument("resample_linear: bad target rate");
  if (wave.sample_rate == target_rate || wave.samples.empty()) {
    Waveform out = wave;
    out.sample_rate = target_rate;
    return out;
  }
  const double ratio = static_cast<double>(wave.sample_rate) / target_rate;
  const std::size_t n_out = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::llround(static_cast<double>(wave.samples.size()) / ratio)));
  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  const std::size_t last = wave.samples.size() - 1;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double x = std::min(static_cast<double>(i) * ratio, static_cast<double>(last));
    const auto i0 = static_cast<std::size_t>(x);
    const std::size_t i1 = std::min(i0 + 1, last);
    const double frac = x - static_cast<double>(i0);
    out.samples[i] = wave.samples[i0] * (1.0 - frac) + wave.samples[i1] * frac;
  }
  return out;
}

Waveform load_audio(const std::string& path, int target_rate) {
  return resample_linear(read_wav(path), target_rate);
}

}  // namespace qasc::audio
