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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vtt/error.hpp"
#include "vtt/parallel.hpp"
#include "vtt/random.hpp"

namespace vtt {

// Named row-major float32 matrix.
struct TensorF32 {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  TensorF32() = default;
  TensorF32(std::string n, std::size_t r, std::size_t c, float fill = 0.0f)
      : name(std::move(n)), rows(r), cols(c), data(r * c, fill) {}
  TensorF32(std::string n, std::size_t r, std::size_t c, std::vector<float> d)
      : name(std::move(n)), rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols)
      throw DimensionError("tensor '" + name + "': data length " + std::to_string(data.size()) +
                           " != " + std::to_string(rows) + "x" + std::to_string(cols));
  }

  std::span<float> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  float& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  float at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool all_finite() const {
    for (const float x : data)
      if (!std::isfinite(x)) return false;
    return true;
  }

  friend bool operator==(const TensorF32&, const TensorF32&) = default;
};

// Tensors in insertion order plus string metadata in insertion order.
struct Checkpoint {
  std::vector<TensorF32> tensors;
  std::vector<std::pair<std::string, std::string>> metadata;

  const TensorF32* find(std::string_view name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }
  TensorF32* find(std::string_view name) {
    for (auto& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }

  std::optional<std::string> meta(std::string_view key) const {
    for (const auto& [k, v] : metadata)
      if (k == key) return v;
    return std::nullopt;
  }
  void set_meta(const std::string& key, std::string value) {
    for (auto& [k, v] : metadata)
      if (k == key) {
        v = std::move(value);
        return;
      }
    metadata.emplace_back(key, std::move(value));
  }

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// rows x cols matrix of i.i.d. N(0, 1) draws; entry (i, j) is
// gaussian_entry(seed, i, j, cols) regardless of `threads`.
inline TensorF32 gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                 std::string name = "gaussian", int threads = 1) {
  if (rows < 1 || cols < 1) throw DimensionError("gaussian_matrix needs rows, cols >= 1");
  TensorF32 t(std::move(name), rows, cols);
  parallel_for(rows, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t j = 0; j < cols; ++j) t.at(i, j) = gaussian_entry(seed, i, j, cols);
  });
  return t;
}

}  // namespace vtt
