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

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vtt/utf8.hpp"
#include "vtt/vocab.hpp"

namespace vtt {

enum class PieceClass { ByteFallback, AlphaNum, Symbol, Other };

inline constexpr std::array<PieceClass, 4> kPieceClasses = {PieceClass::ByteFallback, PieceClass::AlphaNum,
                                                            PieceClass::Symbol, PieceClass::Other};

inline std::string_view class_name(PieceClass c) {
  switch (c) {
    case PieceClass::ByteFallback: return "byte_fallback";
    case PieceClass::AlphaNum: return "alphanum";
    case PieceClass::Symbol: return "symbol";
    case PieceClass::Other: return "other";
  }
  return "other";
}

// Byte pieces first; otherwise, after stripping one leading "▁": all ASCII
// letters/digits -> AlphaNum, all ASCII punctuation -> Symbol, else Other. A
// bare "▁" is Other.
inline PieceClass classify_piece(const Piece& p) {
  if (p.kind == PieceKind::ByteFallback) return PieceClass::ByteFallback;
  std::string_view s = p.text;
  if (utf8::starts_with_boundary(s)) s.remove_prefix(utf8::kBoundary.size());
  if (s.empty()) return PieceClass::Other;
  auto alnum = [](unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  };
  auto punct = [](unsigned char c) { return c >= 0x21 && c <= 0x7E && !((c >= '0' && c <= '9') ||
                                            (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')); };
  if (std::all_of(s.begin(), s.end(), [&](char c) { return alnum(static_cast<unsigned char>(c)); }))
    return PieceClass::AlphaNum;
  if (std::all_of(s.begin(), s.end(), [&](char c) { return punct(static_cast<unsigned char>(c)); }))
    return PieceClass::Symbol;
  return PieceClass::Other;
}

struct OverlapReport {
  std::vector<std::pair<int, int>> shared;  // (id_in_orig, id_in_new), ascending id_in_new
  std::array<std::size_t, 4> counts{};      // indexed by PieceClass
  std::size_t total = 0;

  std::size_t count(PieceClass c) const { return counts[static_cast<std::size_t>(c)]; }
};

// Id in `v_orig` of the piece matching `v_new` piece `id`: specials match by
// role, everything else by exact text (kind included).
inline std::optional<int> match_in(const Vocabulary& v_orig, const Vocabulary& v_new, int id) {
  const Piece& p = v_new.piece(id);
  if (p.kind == PieceKind::Special) return v_orig.special_id(special_role(p.text));
  const auto j = v_orig.find(p.text);
  if (j && v_orig.piece(*j).kind == p.kind) return j;
  return std::nullopt;
}

inline OverlapReport overlap_report(const Vocabulary& v_orig, const Vocabulary& v_new) {
  OverlapReport r;
  for (std::size_t i = 0; i < v_new.size(); ++i) {
    const int id = static_cast<int>(i);
    if (const auto j = match_in(v_orig, v_new, id)) {
      r.shared.emplace_back(*j, id);
      ++r.counts[static_cast<std::size_t>(classify_piece(v_new.piece(id)))];
    }
  }
  r.total = r.shared.size();
  return r;
}

// Class census of a single vocabulary.
inline std::array<std::size_t, 4> class_census(const Vocabulary& v) {
  std::array<std::size_t, 4> c{};
  for (const auto& p : v.pieces()) ++c[static_cast<std::size_t>(classify_piece(p))];
  return c;
}

}  // namespace vtt
