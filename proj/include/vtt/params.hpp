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
#include <cstdint>
#include <optional>
#include <string>

#include "vtt/error.hpp"

namespace vtt {

struct ParamBreakdown {
  std::uint64_t internal = 0;  // transformer layers: 12 d^2 per layer
  std::uint64_t vocab = 0;     // embedding (+ output unless tied)
  std::uint64_t total = 0;

  friend bool operator==(const ParamBreakdown&, const ParamBreakdown&) = default;
};

// With `embed_dim` set, each vocabulary matrix is factorized as a
// vocab_size x embed_dim table times an embed_dim x d projection.
inline ParamBreakdown count_params(std::uint64_t layers, std::uint64_t d, std::uint64_t vocab_size,
                                   std::optional<std::uint64_t> embed_dim = std::nullopt, bool tied = true) {
  if (layers < 1 || d < 1 || vocab_size < 1 || (embed_dim && *embed_dim < 1))
    throw ConfigError("parameter counts need layers, d, vocab_size (and d_e) >= 1");
  ParamBreakdown p;
  p.internal = layers * 12 * d * d;
  const std::uint64_t per_matrix = embed_dim ? vocab_size * *embed_dim + *embed_dim * d : vocab_size * d;
  p.vocab = per_matrix * (tied ? 1 : 2);
  p.total = p.internal + p.vocab;
  return p;
}

// Rounded display in millions: nearest 10M from 100M up, nearest 1M below
// (679,477,248 -> "680M", 7,680,000 -> "8M", 153,600,000 -> "150M").
inline std::string display_millions(std::uint64_t n) {
  const double unit = n >= 100'000'000 ? 10'000'000.0 : 1'000'000.0;
  const auto rounded = static_cast<std::uint64_t>(std::llround(static_cast<double>(n) / unit) * unit);
  return std::to_string(rounded / 1'000'000) + "M";
}

}  // namespace vtt
