// SPDX-License-Identifier: Apache-2.0
#include "qasc/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace qasc::io {

namespace {

static_assert(sizeof(double) == 8, "binary64 doubles required");

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t u;
  std::memcpy(&u, &d, 8);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i)
      u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
    double d;
    std::memcpy(&d, &u, 8);
    return d;
  }

  void raw(char* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("tensor file truncated: " + path_);
  }

  const std::string& bytes_;
  const std::string& path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_tensor_file(const std::string& path, const TensorFile& file) {
  std::string out;
  out.append(file.magic.data(), 4);
  put_u32(out, file.version);
  for (std::uint32_t w : file.config) put_u32(out, w);
  for (const Tensor& t : file.tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) put_u32(out, d);
    if (t.data.size() != t.element_count())
      throw std::invalid_argument("write_tensor_file: tensor data does not match dims");
    for (double d : t.data) put_f64(out, d);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_tensor_file: cannot open " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write_tensor_file: short write to " + path);
}

TensorFile read_tensor_file(const std::string& path, const char* expected_magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_tensor_file: cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(bytes, path);

  TensorFile file;
  r.raw(file.magic.data(), 4);
  if (expected_magic && std::memcmp(file.magic.data(), expected_magic, 4) != 0)
    throw std::runtime_error("read_tensor_file: bad magic in " + path);
  file.version = r.u32();
  if (file.version != 1)
    throw std::runtime_error("read_tensor_file: unsupported version in " + path);
  for (auto& w : file.config) w = r.u32();
  while (!r.at_end()) {
    Tensor t;
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw std::runtime_error("read_tensor_file: implausible tensor rank in " + path);
    t.dims.resize(rank);
    for (auto& d : t.dims) d = r.u32();
    t.data.resize(t.element_count());
    for (auto& d : t.data) d = r.f64();
    file.tensors.push_back(std::move(t));
  }
  return file;
}

}  // namespace qasc::io
