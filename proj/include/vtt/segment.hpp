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
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vtt/error.hpp"
#include "vtt/parallel.hpp"
#include "vtt/utf8.hpp"
#include "vtt/vocab.hpp"

namespace vtt {

struct TokenSeq {
  std::vector<int> ids;
  double score = 0.0;  // sum of piece log_probs, accumulated from the last piece back to the first

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

enum class SegmentMode { Viterbi, MinToken };

// Text in piece space: "▁" before the first character and in place of every
// U+0020. Empty text stays empty.
inline std::string normalize_text(std::string_view text) {
  if (text.empty()) return {};
  std::string out(utf8::kBoundary);
  out.reserve(text.size() + 8);
  for (const char c : text) {
    if (c == ' ') out += utf8::kBoundary;
    else out += c;
  }
  return out;
}

// Inverse of segmentation: piece texts concatenated, byte pieces emitted as
// raw bytes, boundary markers turned back into spaces, and the leading marker
// added by normalize_text dropped. Special pieces decode to nothing.
inline std::string decode(const Vocabulary& v, const std::vector<int>& ids) {
  std::string joined;
  for (const int id : ids) {
    const Piece& p = v.piece(id);
    switch (p.kind) {
      case PieceKind::Normal: joined += p.text; break;
      case PieceKind::ByteFallback: joined += static_cast<char>(*parse_byte_piece(p.text)); break;
      case PieceKind::Special: break;
    }
  }
  std::string out;
  out.reserve(joined.size());
  for (std::size_t i = 0; i < joined.size();) {
    if (std::string_view(joined).substr(i, utf8::kBoundary.size()) == utf8::kBoundary) {
      out += ' ';
      i += utf8::kBoundary.size();
    } else {
      out += joined[i++];
    }
  }
  if (!out.empty() && out.front() == ' ') out.erase(0, 1);
  return out;
}

// Lattice segmenter over a vocabulary's normal pieces. Nodes are character
// positions; a character without a single-character normal piece gets a
// byte-fallback edge (one token per UTF-8 byte) when the vocabulary has byte
// pieces.
//
// Ties are broken deterministically. Viterbi: highest score, then fewer
// tokens, then the longer piece at the earliest point where two candidate
// paths diverge. MinToken: fewest tokens, then highest score, then the same
// longest-earliest rule. The DP runs right to left so the longest-earliest
// rule is a local decision at each node.
class Segmenter {
 public:
  explicit Segmenter(const Vocabulary& vocab) : vocab_(&vocab) {
    nodes_.emplace_back();
    for (std::size_t id = 0; id < vocab.size(); ++id) {
      const Piece& p = vocab.pieces()[id];
      if (p.kind != PieceKind::Normal) continue;
      int node = 0;
      for (const char c : p.text) node = child(node, static_cast<unsigned char>(c), true);
      nodes_[static_cast<std::size_t>(node)].piece = static_cast<int>(id);
    }
  }

  const Vocabulary& vocab() const noexcept { return *vocab_; }

  TokenSeq segment(std::string_view text, SegmentMode mode = SegmentMode::Viterbi) const {
    if (text.empty()) return {};
    utf8::validate(text);
    const std::string norm = normalize_text(text);
    // Byte offset in `text` of each normalized character.
    std::vector<std::size_t> origin;
    origin.reserve(text.size() + 1);
    origin.push_back(0);
    for (std::size_t pos = 0; pos < text.size();) {
      const std::size_t n = utf8::checked_length(text, pos);
      origin.push_back(pos);
      pos += n;
    }
    return run(norm, mode, origin);
  }

  // Segments text that is already in piece space (no normalization).
  TokenSeq segment_pieces(std::string_view norm, SegmentMode mode = SegmentMode::Viterbi) const {
    if (norm.empty()) return {};
    const auto bounds = utf8::char_boundaries(norm);
    std::vector<std::size_t> origin(bounds.begin(), bounds.end() - 1);
    return run(norm, mode, origin);
  }

 private:
  struct Node {
    std::vector<std::pair<unsigned char, int>> kids;  // sorted by byte
    int piece = -1;
  };

  struct Edge {
    std::size_t end;      // character index
    int piece;            // -1 for a byte-fallback edge
    double score;  // unused for byte edges
    std::size_t tokens;
  };

  struct Best {
    bool feasible = false;
    double score = 0.0;
    std::size_t tokens = 0;
    std::size_t end = 0;
    int piece = -1;
  };

  int child(int node, unsigned char c, bool create) {
    auto& kids = nodes_[static_cast<std::size_t>(node)].kids;
    auto it = std::lower_bound(kids.begin(), kids.end(), c,
                               [](const auto& kv, unsigned char b) { return kv.first < b; });
    if (it != kids.end() && it->first == c) return it->second;
    if (!create) return -1;
    const int fresh = static_cast<int>(nodes_.size());
    kids.insert(it, {c, fresh});
    nodes_.emplace_back();
    return fresh;
  }

  int find_child(int node, unsigned char c) const {
    const auto& kids = nodes_[static_cast<std::size_t>(node)].kids;
    auto it = std::lower_bound(kids.begin(), kids.end(), c,
                               [](const auto& kv, unsigned char b) { return kv.first < b; });
    return (it != kids.end() && it->first == c) ? it->second : -1;
  }

  // Normal-piece edges starting at character i, plus a byte edge if needed.
  void edges_from(std::string_view norm, const std::vector<std::size_t>& bounds, std::size_t i,
                  std::vector<Edge>& out, bool& has_single) const {
    out.clear();
    has_single = false;
    int node = 0;
    std::size_t k = i;
    for (std::size_t pos = bounds[i]; pos < norm.size(); ++pos) {
      node = find_child(node, static_cast<unsigned char>(norm[pos]));
      if (node < 0) break;
      if (pos + 1 == bounds[k + 1]) {
        ++k;
        const int piece = nodes_[static_cast<std::size_t>(node)].piece;
        if (piece >= 0) {
          out.push_back({k, piece, vocab_->piece(piece).log_prob, 1});
          if (k == i + 1) has_single = true;
        }
      }
    }
    if (!has_single && vocab_->byte_fallback()) out.push_back({i + 1, -1, 0.0, bounds[i + 1] - bounds[i]});
  }

  static bool better(SegmentMode mode, double score, std::size_t tokens, std::size_t len,
                     const Best& cur, std::size_t cur_len) {
    if (!cur.feasible) return true;
    if (mode == SegmentMode::Viterbi) {
      if (score != cur.score) return score > cur.score;
      if (tokens != cur.tokens) return tokens < cur.tokens;
    } else {
      if (tokens != cur.tokens) return tokens < cur.tokens;
      if (score != cur.score) return score > cur.score;
    }
    return len > cur_len;
  }

  TokenSeq run(std::string_view norm, SegmentMode mode, const std::vector<std::size_t>& origin) const {
    const auto bounds = utf8::char_boundaries(norm);
    const std::size_t n = bounds.size() - 1;
    std::vector<Best> best(n + 1);
    best[n].feasible = true;
    std::vector<Edge> edges;
    std::vector<char> single(n, 0);
    for (std::size_t i = n; i-- > 0;) {
      bool has_single = false;
      edges_from(norm, bounds, i, edges, has_single);
      single[i] = has_single;
      Best& b = best[i];
      for (const Edge& e : edges) {
        const Best& rest = best[e.end];
        if (!rest.feasible) continue;
        double score = rest.score;
        if (e.piece >= 0) {
          score = e.score + score;
        } else {
          for (std::size_t pos = bounds[i + 1]; pos-- > bounds[i];)
            score = vocab_->piece(*vocab_->byte_id(static_cast<unsigned char>(norm[pos]))).log_prob + score;
        }
        const std::size_t tokens = e.tokens + rest.tokens;
        if (better(mode, score, tokens, e.end - i, b, b.end - i)) {
          b.feasible = true;
          b.score = score;
          b.tokens = tokens;
          b.end = e.end;
          b.piece = e.piece;
        }
      }
    }
    if (!best[0].feasible) fail(norm, bounds, single, origin);

    TokenSeq seq;
    seq.ids.reserve(best[0].tokens);
    for (std::size_t i = 0; i < n; i = best[i].end) {
      if (best[i].piece >= 0) {
        seq.ids.push_back(best[i].piece);
      } else {
        for (std::size_t pos = bounds[i]; pos < bounds[i + 1]; ++pos)
          seq.ids.push_back(*vocab_->byte_id(static_cast<unsigned char>(norm[pos])));
      }
    }
    seq.score = best[0].score;
    return seq;
  }

  // Reports the first character that no edge reachable from the start spans.
  [[noreturn]] void fail(std::string_view norm, const std::vector<std::size_t>& bounds,
                         const std::vector<char>& single, const std::vector<std::size_t>& origin) const {
    const std::size_t n = bounds.size() - 1;
    std::vector<char> reach(n + 1, 0);
    std::vector<char> spanned(n, 0);
    reach[0] = 1;
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
      if (!reach[i]) continue;
      bool has_single = false;
      edges_from(norm, bounds, i, edges, has_single);
      for (const Edge& e : edges) {
        reach[e.end] = 1;
        for (std::size_t k = i; k < e.end; ++k) spanned[k] = 1;
      }
    }
    std::size_t bad = n;
    for (std::size_t k = 0; k < n && bad == n; ++k)
      if (!spanned[k]) bad = k;
    if (bad == n)
      for (std::size_t k = 0; k < n && bad == n; ++k)
        if (!single[k]) bad = k;
    if (bad == n) bad = 0;
    const std::string ch(norm.substr(bounds[bad], bounds[bad + 1] - bounds[bad]));
    throw SegmentError(origin[bad], "no piece covers '" + ch + "' and byte fallback is disabled");
  }

  const Vocabulary* vocab_;
  std::vector<Node> nodes_;
};

inline TokenSeq viterbi_segment(const Vocabulary& v, std::string_view text) {
  return Segmenter(v).segment(text, SegmentMode::Viterbi);
}

inline TokenSeq min_token_segment(const Vocabulary& v, std::string_view text) {
  return Segmenter(v).segment(text, SegmentMode::MinToken);
}

// ---------------------------------------------------------------------------
// Corpus statistics

struct TokenStats {
  std::uint64_t lines = 0;
  std::uint64_t total_words = 0;
  std::uint64_t total_tokens = 0;
  std::uint64_t total_bytes = 0;
  std::uint64_t total_chars = 0;

  double fertility() const {
    return total_words == 0 ? 0.0 : static_cast<double>(total_tokens) / static_cast<double>(total_words);
  }
  double bytes_per_token() const {
    return total_tokens == 0 ? 0.0 : static_cast<double>(total_bytes) / static_cast<double>(total_tokens);
  }

  TokenStats& operator+=(const TokenStats& o) {
    lines += o.lines;
    total_words += o.total_words;
    total_tokens += o.total_tokens;
    total_bytes += o.total_bytes;
    total_chars += o.total_chars;
    return *this;
  }

  friend bool operator==(const TokenStats&, const TokenStats&) = default;
};

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

inline std::uint64_t count_words(std::string_view line) {
  std::uint64_t words = 0;
  bool in_word = false;
  for (const char c : line) {
    const bool space = is_ascii_space(c);
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

inline TokenStats line_stats(const Segmenter& seg, std::string_view line, SegmentMode mode) {
  TokenStats s;
  s.lines = 1;
  s.total_bytes = line.size();
  s.total_chars = utf8::char_count(line);
  s.total_words = count_words(line);
  s.total_tokens = seg.segment(line, mode).ids.size();
  return s;
}

// Streams `in` line by line (split on '\n', a trailing '\r' is dropped) and
// sums per-line statistics. Specials are never counted. Lines are processed in
// fixed-size batches; per-line results are summed in line order so the result
// does not depend on `threads`. Errors name the first failing line.
inline TokenStats corpus_stats(const Vocabulary& v, std::istream& in, SegmentMode mode,
                               int threads = 1) {
  constexpr std::size_t kBatch = 4096;
  const Segmenter seg(v);
  TokenStats total;
  std::vector<std::string> batch;
  std::vector<TokenStats> partial;
  std::vector<std::string> errors;
  std::uint64_t first_line = 1;
  std::string line;
  bool more = true;
  while (more) {
    batch.clear();
    while (batch.size() < kBatch && (more = static_cast<bool>(std::getline(in, line)))) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      batch.push_back(line);
    }
    if (batch.empty()) break;
    partial.assign(batch.size(), TokenStats{});
    errors.assign(batch.size(), std::string{});
    parallel_for(batch.size(), threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        try {
          partial[k] = line_stats(seg, batch[k], mode);
        } catch (const Error& e) {
          errors[k] = e.what();
        }
      }
    });
    for (std::size_t k = 0; k < batch.size(); ++k) {
      if (!errors[k].empty()) throw ParseError(first_line + k, errors[k]);
      total += partial[k];
    }
    first_line += batch.size();
  }
  return total;
}

}  // namespace vtt
