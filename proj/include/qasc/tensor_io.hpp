// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace qasc::io {

// Shared on-disk container for model checkpoints and per-clip feature caches.
// Layout (all integers little-endian, floats IEEE-754 binary64 little-endian):
//   byte 0..3   magic, four ASCII bytes ("QASC" or "QVAE")
//   byte 4..7   format version (u32), currently 1
//   byte 8..31  config block: six u32 words, meaning defined by the file role
//   then, until end of file, tensors:
//     rank (u32), dims (rank x u32), data (prod(dims) x f64)
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;

  std::size_t element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

struct TensorFile {
  std::array<char, 4> magic{};
  std::uint32_t version = 1;
  std::array<std::uint32_t, 6> config{};
  std::vector<Tensor> tensors;
};

void write_tensor_file(const std::string& path, const TensorFile& file);

// Throws std::runtime_error on I/O failure, bad magic (when expected_magic is
// non-null), version mismatch, truncation, or trailing bytes.
TensorFile read_tensor_file(const std::string& path, const char* expected_magic = nullptr);

}  // namespace qasc::io
