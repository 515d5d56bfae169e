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
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vtt/error.hpp"
#include "vtt/utf8.hpp"

namespace vtt {

enum class PieceKind { Normal, ByteFallback, Special };

struct Piece {
  std::string text;
  double log_prob = 0.0;  // natural log; 0 sentinel for specials
  PieceKind kind = PieceKind::Normal;

  friend bool operator==(const Piece&, const Piece&) = default;
};

// Special pieces occupy ids 0..3 in trained vocabularies.
inline constexpr std::array<std::pair<std::string_view, std::string_view>, 4>
    kSpecialPieces = {{{"unk", "<unk>"}, {"bos", "<s>"}, {"eos", "</s>"}, {"pad", "<pad>"}}};

inline std::string byte_piece_text(std::uint8_t b) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "<0x%02X>", static_cast<unsigned>(b));
  return buf;
}

// Parses "<0xNN>" with two uppercase hex digits.
inline std::optional<std::uint8_t> parse_byte_piece(std::string_view text) {
  if (text.size() != 6 || text.substr(0, 3) != "<0x" || text[5] != '>') return std::nullopt;
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  const int hi = hex(text[3]), lo = hex(text[4]);
  if (hi < 0 || lo < 0) return std::nullopt;
  return static_cast<std::uint8_t>(hi * 16 + lo);
}

// Role name of a special piece: "unk"/"bos"/"eos"/"pad" for the standard
// texts, otherwise the text itself.
inline std::string special_role(std::string_view text) {
  for (const auto& [role, t] : kSpecialPieces)
    if (t == text) return std::string(role);
  return std::string(text);
}

// Ordered pieces; the index of a piece is its token id. Immutable once built.
class Vocabulary {
 public:
  Vocabulary() = default;

  explicit Vocabulary(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
    index_.reserve(pieces_.size());
    byte_ids_.fill(-1);
    int byte_count = 0;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      const Piece& p = pieces_[i];
      const int id = static_cast<int>(i);
      if (p.text.empty()) throw ValidationError("piece " + std::to_string(i) + " has empty text");
      utf8::validate(p.text);
      if (p.text.find_first_of("\t\n\r") != std::string::npos)
        throw ValidationError("piece " + std::to_string(i) + " contains tab or newline");
      if (!std::isfinite(p.log_prob))
        throw ValidationError("piece " + std::to_string(i) + " has non-finite log_prob");
      if (!index_.emplace(p.text, id).second)
        throw ValidationError("duplicate piece '" + p.text + "' at id " + std::to_string(i));
      switch (p.kind) {
        case PieceKind::ByteFallback: {
          const auto b = parse_byte_piece(p.text);
          if (!b) throw ValidationError("byte piece '" + p.text + "' is not of the form <0xNN>");
          byte_ids_[*b] = id;
          ++byte_count;
          break;
        }
        case PieceKind::Special:
          specials_.emplace(special_role(p.text), id);
          break;
        case PieceKind::Normal: {
          const std::size_t n = utf8::char_count(p.text);
          max_piece_chars_ = std::max(max_piece_chars_, n);
          break;
        }
      }
    }
    byte_fallback_ = byte_count == 256;
  }

  std::size_t size() const noexcept { return pieces_.size(); }
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }
  const Piece& piece(int id) const { return pieces_.at(static_cast<std::size_t>(id)); }
  bool byte_fallback() const noexcept { return byte_fallback_; }
  const std::map<std::string, int>& specials() const noexcept { return specials_; }
  std::size_t max_piece_chars() const noexcept { return max_piece_chars_; }

  std::optional<int> find(std::string_view text) const {
    const auto it = index_.find(std::string(text));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Id of the normal piece with exactly this text.
  std::optional<int> find_normal(std::string_view text) const {
    const auto id = find(text);
    if (id && pieces_[static_cast<std::size_t>(*id)].kind == PieceKind::Normal) return id;
    return std::nullopt;
  }

  std::optional<int> byte_id(std::uint8_t b) const {
    if (byte_ids_[b] < 0) return std::nullopt;
    return byte_ids_[b];
  }

  std::optional<int> special_id(const std::string& role) const {
    const auto it = specials_.find(role);
    if (it == specials_.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.pieces_ == b.pieces_; }

 private:
  std::vector<Piece> pieces_;
  std::unordered_map<std::string, int> index_;
  std::map<std::string, int> specials_;
  std::array<int, 256> byte_ids_{};
  bool byte_fallback_ = false;
  std::size_t max_piece_chars_ = 0;
};

inline std::vector<Piece> special_pieces() {
  std::vector<Piece> out;
  for (const auto& [role, text] : kSpecialPieces) out.push_back({std::string(text), 0.0, PieceKind::Special});
  return out;
}

inline std::vector<Piece> byte_pieces(double log_prob) {
  std::vector<Piece> out;
  for (int b = 0; b < 256; ++b)
    out.push_back({byte_piece_text(static_cast<std::uint8_t>(b)), log_prob, PieceKind::ByteFallback});
  return out;
}

// Specials, then (optionally) the 256 byte pieces, then `normal` in order.
// Log probabilities are taken as given; no normalization.
inline Vocabulary make_vocab(const std::vector<std::pair<std::string, double>>& normal,
                             bool byte_fallback = true, double byte_log_prob = -20.0) {
  std::vector<Piece> pieces = special_pieces();
  if (byte_fallback) {
    auto bytes = byte_pieces(byte_log_prob);
    pieces.insert(pieces.end(), bytes.begin(), bytes.end());
  }
  for (const auto& [text, lp] : normal) pieces.push_back({text, lp, PieceKind::Normal});
  return Vocabulary(std::move(pieces));
}

// Shifts non-special log_probs so their exponentials sum to one.
inline void normalize_log_probs(std::vector<Piece>& pieces) {
  double max_lp = -std::numeric_limits<double>::infinity();
  for (const auto& p : pieces)
    if (p.kind != PieceKind::Special) max_lp = std::max(max_lp, p.log_prob);
  if (!std::isfinite(max_lp)) return;
  double sum = 0.0;
  for (const auto& p : pieces)
    if (p.kind != PieceKind::Special) sum += std::exp(p.log_prob - max_lp);
  const double log_z = max_lp + std::log(sum);
  for (auto& p : pieces)
    if (p.kind != PieceKind::Special) p.log_prob -= log_z;
}

inline double probability_mass(const Vocabulary& v) {
  double sum = 0.0;
  for (const auto& p : v.pieces())
    if (p.kind != PieceKind::Special) sum += std::exp(p.log_prob);
  return sum;
}

// Keeps specials, byte pieces, every single-character normal piece and the
// most probable remaining normal pieces until `size` pieces remain. Relative
// order is preserved and probabilities are renormalized, so truncations of one
// vocabulary to decreasing sizes form a nested chain.
inline Vocabulary truncate_vocab(const Vocabulary& v, std::size_t size) {
  std::vector<char> keep(v.size(), 0);
  std::vector<int> optional_ids;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Piece& p = v.pieces()[i];
    if (p.kind != PieceKind::Normal || utf8::char_count(p.text) == 1) {
      keep[i] = 1;
      ++kept;
    } else {
      optional_ids.push_back(static_cast<int>(i));
    }
  }
  if (size < kept)
    throw ConfigError("cannot truncate below " + std::to_string(kept) +
                      " pieces (specials, bytes and single characters)");
  if (size > v.size())
    throw ConfigError("cannot truncate a " + std::to_string(v.size()) +
                      "-piece vocabulary to " + std::to_string(size));
  std::stable_sort(optional_ids.begin(), optional_ids.end(), [&](int a, int b) {
    return v.piece(a).log_prob > v.piece(b).log_prob;
  });
  for (std::size_t k = 0; kept < size; ++k, ++kept) keep[static_cast<std::size_t>(optional_ids[k])] = 1;
  std::vector<Piece> pieces;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (keep[i]) pieces.push_back(v.pieces()[i]);
  normalize_log_probs(pieces);
  return Vocabulary(std::move(pieces));
}

// ---------------------------------------------------------------------------
// TSV serialization
//
//   #vtt-vocab v1 size=<N> byte_fallback=<0|1>
//   <piece-text>\t<log_prob>\t<normal|byte|special>
//
// The k-th line after the header holds token id k. log_prob is printed with 17
// significant digits so a save/load cycle is exact.

inline std::string_view kind_name(PieceKind k) {
  switch (k) {
    case PieceKind::Normal: return "normal";
    case PieceKind::ByteFallback: return "byte";
    case PieceKind::Special: return "special";
  }
  return "normal";
}

inline std::string format_log_prob(double lp) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", lp);
  return buf;
}

inline void write_vocab(const Vocabulary& v, std::ostream& out) {
  out << "#vtt-vocab v1 size=" << v.size() << " byte_fallback=" << (v.byte_fallback() ? 1 : 0) << '\n';
  for (const auto& p : v.pieces())
    out << p.text << '\t' << format_log_prob(p.log_prob) << '\t' << kind_name(p.kind) << '\n';
}

inline std::string vocab_to_string(const Vocabulary& v) {
  std::ostringstream ss;
  write_vocab(v, ss);
  return ss.str();
}

inline Vocabulary read_vocab(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  std::size_t declared_size = 0;
  int declared_bf = -1;
  {
    std::istringstream hs(line);
    std::string magic, version, size_kv, bf_kv;
    hs >> magic >> version >> size_kv >> bf_kv;
    std::string extra;
    if (magic != "#vtt-vocab" || version != "v1" || size_kv.rfind("size=", 0) != 0 ||
        bf_kv.rfind("byte_fallback=", 0) != 0 || (hs >> extra))
      throw ParseError(1, "malformed header");
    try {
      std::size_t used = 0;
      const std::string num = size_kv.substr(5);
      declared_size = std::stoull(num, &used);
      if (used != num.size()) throw std::invalid_argument("size");
    } catch (const std::exception&) {
      throw ParseError(1, "malformed size field");
    }
    const std::string bf = bf_kv.substr(14);
    if (bf != "0" && bf != "1") throw ParseError(1, "byte_fallback must be 0 or 1");
    declared_bf = bf == "1" ? 1 : 0;
  }

  std::vector<Piece> pieces;
  std::unordered_map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos)
      throw ParseError(lineno, "expected 3 tab-separated fields");
    Piece p;
    p.text = line.substr(0, t1);
    const std::string lp = line.substr(t1 + 1, t2 - t1 - 1);
    const std::string kind = line.substr(t2 + 1);
    if (p.text.empty()) throw ParseError(lineno, "empty piece text");
    try {
      utf8::validate(p.text);
    } catch (const DecodeError& e) {
      throw ParseError(lineno, e.what());
    }
    try {
      std::size_t used = 0;
      p.log_prob = std::stod(lp, &used);
      if (used != lp.size() || !std::isfinite(p.log_prob)) throw std::invalid_argument("lp");
    } catch (const std::exception&) {
      throw ParseError(lineno, "malformed log_prob '" + lp + "'");
    }
    if (kind == "normal") p.kind = PieceKind::Normal;
    else if (kind == "byte") p.kind = PieceKind::ByteFallback;
    else if (kind == "special") p.kind = PieceKind::Special;
    else throw ParseError(lineno, "unknown kind '" + kind + "'");
    if (p.kind == PieceKind::ByteFallback && !parse_byte_piece(p.text))
      throw ParseError(lineno, "byte piece '" + p.text + "' is not of the form <0xNN>");
    if (const auto [it, fresh] = seen.emplace(p.text, lineno); !fresh)
      throw ParseError(lineno, "duplicate piece '" + p.text + "' (first at line " +
                                   std::to_string(it->second) + ")");
    pieces.push_back(std::move(p));
  }
  if (pieces.size() != declared_size)
    throw ParseError(lineno, "header declares size=" + std::to_string(declared_size) + " but " +
                                 std::to_string(pieces.size()) + " pieces follow");
  Vocabulary v(std::move(pieces));
  if ((v.byte_fallback() ? 1 : 0) != declared_bf)
    throw ParseError(1, "header byte_fallback flag disagrees with the byte pieces present");
  return v;
}

inline Vocabulary vocab_from_string(const std::string& s) {
  std::istringstream ss(s);
  return read_vocab(ss);
}

inline Vocabulary load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open vocabulary '" + path.string() + "'");
  return read_vocab(in);
}

inline void save_vocab(const Vocabulary& v, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write vocabulary '" + path.string() + "'");
  write_vocab(v, out);
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

// 64-bit FNV-1a over the TSV serialization; identifies a vocabulary in
// checkpoint metadata.
inline std::uint64_t vocab_fingerprint(const Vocabulary& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : vocab_to_string(v)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace vtt
