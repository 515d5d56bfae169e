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

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vtt/error.hpp"

namespace vtt::utf8 {

// U+2581 LOWER ONE EIGHTH BLOCK, prefixed to every word.
inline constexpr std::string_view kBoundary = "\xE2\x96\x81";

// Length of the UTF-8 sequence introduced by `lead`, or 0 for a byte that
// cannot start a sequence.
constexpr std::size_t sequence_length(unsigned char lead) noexcept {
  if (lead < 0x80) return 1;
  if (lead >= 0xC2 && lead <= 0xDF) return 2;
  if (lead >= 0xE0 && lead <= 0xEF) return 3;
  if (lead >= 0xF0 && lead <= 0xF4) return 4;
  return 0;
}

// Validates the sequence at `pos` and returns its length. Rejects overlong
// forms, surrogates and code points above U+10FFFF.
inline std::size_t checked_length(std::string_view s, std::size_t pos,
                                  std::size_t base_offset = 0) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  const std::size_t n = sequence_length(lead);
  if (n == 0) throw DecodeError(base_offset + pos, "bad lead byte");
  if (pos + n > s.size()) throw DecodeError(base_offset + pos, "truncated sequence");
  for (std::size_t k = 1; k < n; ++k) {
    const auto c = static_cast<unsigned char>(s[pos + k]);
    if ((c & 0xC0) != 0x80) throw DecodeError(base_offset + pos, "bad continuation byte");
  }
  if (n == 3) {
    const auto c1 = static_cast<unsigned char>(s[pos + 1]);
    if (lead == 0xE0 && c1 < 0xA0) throw DecodeError(base_offset + pos, "overlong sequence");
    if (lead == 0xED && c1 >= 0xA0) throw DecodeError(base_offset + pos, "surrogate code point");
  } else if (n == 4) {
    const auto c1 = static_cast<unsigned char>(s[pos + 1]);
    if (lead == 0xF0 && c1 < 0x90) throw DecodeError(base_offset + pos, "overlong sequence");
    if (lead == 0xF4 && c1 >= 0x90) throw DecodeError(base_offset + pos, "code point above U+10FFFF");
  }
  return n;
}

inline void validate(std::string_view s, std::size_t base_offset = 0) {
  for (std::size_t pos = 0; pos < s.size();) pos += checked_length(s, pos, base_offset);
}

// Byte offsets of every character start plus a final s.size() sentinel.
inline std::vector<std::size_t> char_boundaries(std::string_view s,
                                                std::size_t base_offset = 0) {
  std::vector<std::size_t> bounds;
  bounds.reserve(s.size() + 1);
  for (std::size_t pos = 0; pos < s.size();) {
    bounds.push_back(pos);
    pos += checked_length(s, pos, base_offset);
  }
  bounds.push_back(s.size());
  return bounds;
}

inline std::size_t char_count(std::string_view s) {
  return char_boundaries(s).size() - 1;
}

inline bool starts_with_boundary(std::string_view s) noexcept {
  return s.substr(0, kBoundary.size()) == kBoundary;
}

}  // namespace vtt::utf8
