// Copyright 2026 The VTT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "vtt/error.hpp"
#include "vtt/tensor.hpp"

namespace vtt {

// VTT1 checkpoint container. All integers little-endian.
//
//   "VTT1"
//   u32 tensor_count
//   per tensor: u16 name_len, name (UTF-8), u32 rows, u32 cols,
//               rows*cols float32 values
//   u32 metadata_count
//   per entry:  u32 key_len, key, u32 value_len, value
//   u32 CRC-32 (zlib polynomial) of every preceding byte
//
// Writes go to "<path>.tmp" and are renamed into place.

inline constexpr char kCheckpointMagic[4] = {'V', 'T', 'T', '1'};

namespace detail {

template <typename T>
T to_le(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

class CrcWriter {
 public:
  explicit CrcWriter(std::ofstream& out) : out_(out) {}

  void bytes(const void* p, std::size_t n) {
    auto* b = static_cast<const unsigned char*>(p);
    while (n > 0) {
      const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
      crc_ = crc32(crc_, b, chunk);
      out_.write(reinterpret_cast<const char*>(b), chunk);
      b += chunk;
      n -= chunk;
    }
  }
  template <typename T>
  void scalar(T v) {
    v = to_le(v);
    bytes(&v, sizeof(v));
  }
  void floats(const std::vector<float>& data) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(data.data(), data.size() * sizeof(float));
    } else {
      for (const float f : data) scalar(std::bit_cast<std::uint32_t>(f));
    }
  }
  std::uint32_t crc() const { return static_cast<std::uint32_t>(crc_); }

 private:
  std::ofstream& out_;
  uLong crc_ = crc32(0L, Z_NULL, 0);
};

class CrcReader {
 public:
  CrcReader(std::ifstream& in, std::uint64_t size) : in_(in), size_(size) {}

  std::uint64_t offset() const { return offset_; }
  std::uint64_t remaining() const { return size_ - offset_; }

  void bytes(void* p, std::size_t n, const char* what) {
    if (n > remaining())
      throw FormatError(offset_, std::string("truncated ") + what + " (need " + std::to_string(n) + " bytes, " +
                                     std::to_string(remaining()) + " left)");
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw FormatError(offset_, std::string("read failed in ") + what);
    auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t done = 0; done < n;) {
      const auto chunk = static_cast<uInt>(std::min<std::size_t>(n - done, 1u << 30));
      crc_ = crc32(crc_, b + done, chunk);
      done += chunk;
    }
    offset_ += n;
  }
  template <typename T>
  T scalar(const char* what) {
    T v{};
    bytes(&v, sizeof(v), what);
    return to_le(v);
  }
  std::string string(std::size_t n, const char* what) {
    std::string s(n, '\0');
    if (n > 0) bytes(s.data(), n, what);
    return s;
  }
  std::uint32_t crc() const { return static_cast<std::uint32_t>(crc_); }

 private:
  std::ifstream& in_;
  std::uint64_t size_;
  std::uint64_t offset_ = 0;
  uLong crc_ = crc32(0L, Z_NULL, 0);
};

}  // namespace detail

inline void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::unordered_set<std::string> names;
  for (const auto& t : ckpt.tensors) {
    if (t.name.empty()) throw ValidationError("tensor with empty name");
    if (t.name.size() > 0xFFFF) throw ValidationError("tensor name longer than 65535 bytes: " + t.name.substr(0, 32));
    if (!names.insert(t.name).second) throw ValidationError("duplicate tensor name '" + t.name + "'");
    if (t.data.size() != t.rows * t.cols) throw ValidationError("tensor '" + t.name + "' has inconsistent shape");
    if (t.rows > 0xFFFFFFFFu || t.cols > 0xFFFFFFFFu) throw ValidationError("tensor '" + t.name + "' too large");
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    detail::CrcWriter w(out);
    w.bytes(kCheckpointMagic, 4);
    w.scalar(static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& t : ckpt.tensors) {
      w.scalar(static_cast<std::uint16_t>(t.name.size()));
      w.bytes(t.name.data(), t.name.size());
      w.scalar(static_cast<std::uint32_t>(t.rows));
      w.scalar(static_cast<std::uint32_t>(t.cols));
      w.floats(t.data);
    }
    w.scalar(static_cast<std::uint32_t>(ckpt.metadata.size()));
    for (const auto& [k, v] : ckpt.metadata) {
      w.scalar(static_cast<std::uint32_t>(k.size()));
      w.bytes(k.data(), k.size());
      w.scalar(static_cast<std::uint32_t>(v.size()));
      w.bytes(v.data(), v.size());
    }
    const std::uint32_t crc = detail::to_le(w.crc());
    out.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw Error("write failed for '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

// Parses a VTT1 file. Any inconsistency throws FormatError with the byte
// offset; no partially read checkpoint escapes. Allocation sizes are checked
// against the bytes left in the file before anything is reserved.
inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  std::error_code ec;
  const std::uint64_t size = std::filesystem::file_size(path, ec);
  if (ec) throw Error("cannot stat checkpoint '" + path.string() + "'");
  if (size < 4 + 4 + 4 + 4) throw FormatError(0, "file too short (" + std::to_string(size) + " bytes)");
  detail::CrcReader r(in, size - 4);  // trailing CRC is read separately

  char magic[4];
  r.bytes(magic, 4, "magic");
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw FormatError(0, "bad magic (expected VTT1)");

  Checkpoint ckpt;
  std::unordered_set<std::string> names;
  const auto count_at = r.offset();
  const auto count = r.scalar<std::uint32_t>("tensor count");
  // Every tensor needs at least 10 header bytes.
  if (static_cast<std::uint64_t>(count) * 10 > r.remaining())
    throw FormatError(count_at, "tensor count " + std::to_string(count) + " exceeds file size");
  ckpt.tensors.reserve(count);
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto entry_at = r.offset();
    const auto name_len = r.scalar<std::uint16_t>("tensor name length");
    if (name_len == 0) throw FormatError(entry_at, "empty tensor name");
    std::string name = r.string(name_len, "tensor name");
    if (!names.insert(name).second) throw FormatError(entry_at, "duplicate tensor name '" + name + "'");
    const auto rows = r.scalar<std::uint32_t>("rows");
    const auto cols = r.scalar<std::uint32_t>("cols");
    const std::uint64_t n = static_cast<std::uint64_t>(rows) * cols;
    const auto payload_at = r.offset();
    if (n * 4 > r.remaining())
      throw FormatError(payload_at, "tensor '" + name + "' payload of " + std::to_string(n * 4) +
                                        " bytes exceeds file size");
    std::vector<float> data(static_cast<std::size_t>(n));
    if constexpr (std::endian::native == std::endian::little) {
      if (n > 0) r.bytes(data.data(), static_cast<std::size_t>(n * 4), "tensor payload");
    } else {
      for (auto& f : data) f = std::bit_cast<float>(r.scalar<std::uint32_t>("tensor payload"));
    }
    for (std::size_t k = 0; k < data.size(); ++k)
      if (!std::isfinite(data[k]))
        throw FormatError(payload_at + 4 * k, "non-finite value in tensor '" + name + "'");
    ckpt.tensors.emplace_back(std::move(name), rows, cols, std::move(data));
  }
  const auto meta_at = r.offset();
  const auto meta_count = r.scalar<std::uint32_t>("metadata count");
  if (static_cast<std::uint64_t>(meta_count) * 8 > r.remaining())
    throw FormatError(meta_at, "metadata count " + std::to_string(meta_count) + " exceeds file size");
  for (std::uint32_t m = 0; m < meta_count; ++m) {
    const auto klen_at = r.offset();
    const auto klen = r.scalar<std::uint32_t>("metadata key length");
    if (klen > r.remaining()) throw FormatError(klen_at, "metadata key length exceeds file size");
    std::string key = r.string(klen, "metadata key");
    const auto vlen_at = r.offset();
    const auto vlen = r.scalar<std::uint32_t>("metadata value length");
    if (vlen > r.remaining()) throw FormatError(vlen_at, "metadata value length exceeds file size");
    ckpt.metadata.emplace_back(std::move(key), r.string(vlen, "metadata value"));
  }
  if (r.remaining() != 0)
    throw FormatError(r.offset(), std::to_string(r.remaining()) + " unexpected bytes before checksum");
  std::uint32_t stored = 0;
  in.read(reinterpret_cast<char*>(&stored), 4);
  if (!in) throw FormatError(r.offset(), "truncated checksum");
  stored = detail::to_le(stored);
  if (stored != r.crc()) throw FormatError(r.offset(), "checksum mismatch");
  return ckpt;
}

}  // namespace vtt
