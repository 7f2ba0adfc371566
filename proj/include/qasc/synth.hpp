// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qasc::cli {

// Knobs for the bundled synthetic corpus: three acoustic classes with
// signature spectra ("engine" low harmonics, "siren" mid-band FM tone,
// "tick" high-band gated bursts), each clip seeded with its own detune,
// level, and noise-bed realization.
struct SynthSpec {
  int clips_per_class = 40;
  double duration_s = 1.0;
  int sample_rate = 16000;
};

// Writes <out_dir>/audio/<class>_<index>.wav (PCM16) plus the two-column
// manifest <out_dir>/meta.txt, and returns the manifest path. Identical
// (spec, seed) pairs produce byte-identical files.
std::string synth_corpus(const std::string& out_dir, const SynthSpec& spec, std::uint64_t seed);

// The fixed class names in label order.
std::vector<std::string> synth_class_names();

}  // namespace qasc::cli
