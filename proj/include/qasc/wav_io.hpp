// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "qasc/audio.hpp"

namespace qasc::audio {

// Reads a RIFF/WAVE file. Accepts 16-bit PCM and 32-bit IEEE float;
// multi-channel input is averaged down to mono. Throws std::runtime_error on
// I/O failure or malformed/unsupported files.
Waveform read_wav(const std::string& path);

void write_wav_pcm16(const std::string& path, const Waveform& wave);
void write_wav_float32(const std::string& path, const Waveform& wave);

// Linear-interpolation resampler.
Waveform resample_linear(const Waveform& wave, int target_rate);

// read_wav + resample_linear to the configured rate.
Waveform load_audio(const std::string& path, int target_rate);

}  // namespace qasc::audio
