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

// Brute-force reference implementations. They share no code with the
// library's lattice, trie or EM machinery: segmentations are enumerated over
// every split mask and pieces are matched by scanning the vocabulary.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vtt/vocab.hpp"

namespace vtt::testing {

// Characters of `s` as separate strings (UTF-8 aware, no validation).
inline std::vector<std::string> split_chars(const std::string& s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    const std::size_t n = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
    out.push_back(s.substr(i, n));
    i += n;
  }
  return out;
}

inline std::string to_piece_space(const std::string& text) {
  if (text.empty()) return {};
  std::string out = "\xE2\x96\x81";
  for (const char c : text) out += c == ' ' ? std::string("\xE2\x96\x81") : std::string(1, c);
  return out;
}

inline std::optional<int> scan_normal(const Vocabulary& v, const std::string& text) {
  for (std::size_t id = 0; id < v.size(); ++id)
    if (v.pieces()[id].kind == PieceKind::Normal && v.pieces()[id].text == text) return static_cast<int>(id);
  return std::nullopt;
}

inline std::optional<int> scan_byte(const Vocabulary& v, unsigned char b) {
  const std::string want = byte_piece_text(b);
  for (std::size_t id = 0; id < v.size(); ++id)
    if (v.pieces()[id].kind == PieceKind::ByteFallback && v.pieces()[id].text == want) return static_cast<int>(id);
  return std::nullopt;
}

struct BruteResult {
  bool found = false;
  std::vector<int> ids;
  double score = 0.0;
  std::size_t tokens = 0;
  std::vector<std::size_t> lengths;  // segment lengths in characters
};

// Best segmentation of `text` (raw, normalized here) by exhaustive search over
// all 2^(n-1) split masks. Viterbi order: score desc, tokens asc, then the
// lexicographically larger sequence of segment lengths. MinToken order swaps
// the first two keys. Scores are summed from the last piece back to the
// first so that floating-point ties round the same way as the library's.
inline BruteResult brute_force_segment(const Vocabulary& v, const std::string& text, bool min_token = false) {
  BruteResult best;
  const auto chars = split_chars(to_piece_space(text));
  const std::size_t n = chars.size();
  if (n == 0) {
    best.found = true;
    return best;
  }
  const std::uint64_t masks = std::uint64_t{1} << (n - 1);
  for (std::uint64_t mask = 0; mask < masks; ++mask) {
    BruteResult cand;
    cand.found = true;
    std::size_t start = 0;
    for (std::size_t k = 0; k < n && cand.found; ++k) {
      const bool cut = k + 1 == n || ((mask >> k) & 1);
      if (!cut) continue;
      std::string seg;
      for (std::size_t c = start; c <= k; ++c) seg += chars[c];
      const std::size_t len = k + 1 - start;
      if (const auto id = scan_normal(v, seg)) {
        cand.ids.push_back(*id);
      } else if (len == 1 && v.byte_fallback()) {
        for (const char b : seg) cand.ids.push_back(*scan_byte(v, static_cast<unsigned char>(b)));
      } else {
        cand.found = false;
      }
      cand.lengths.push_back(len);
      start = k + 1;
    }
    if (!cand.found) continue;
    for (auto it = cand.ids.rbegin(); it != cand.ids.rend(); ++it) cand.score = v.piece(*it).log_prob + cand.score;
    cand.tokens = cand.ids.size();
    bool better;
    if (!best.found) {
      better = true;
    } else if (!min_token) {
      better = cand.score != best.score ? cand.score > best.score
               : cand.tokens != best.tokens ? cand.tokens < best.tokens
                                            : cand.lengths > best.lengths;
    } else {
      better = cand.tokens != best.tokens ? cand.tokens < best.tokens
               : cand.score != best.score ? cand.score > best.score
                                          : cand.lengths > best.lengths;
    }
    if (better) best = std::move(cand);
  }
  return best;
}

// Occurrence-weighted substring counts of "▁"-prefixed whitespace words,
// computed on code point arrays with std::map.
inline std::map<std::string, std::uint64_t> brute_force_substrings(const std::string& corpus, std::size_t max_len) {
  std::map<std::string, std::uint64_t> counts;
  std::vector<std::string> words;
  std::string cur;
  for (const char c : corpus) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
      if (!cur.empty()) words.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) words.push_back(cur);
  for (const auto& w : words) {
    auto chars = split_chars(w);
    chars.insert(chars.begin(), "\xE2\x96\x81");
    for (std::size_t i = 0; i < chars.size(); ++i) {
      std::string s;
      for (std::size_t j = i; j < chars.size(); ++j) {
        s += chars[j];
        const std::size_t len = j - i + 1;
        const std::size_t counted = (i == 0 && len > 1) ? len - 1 : len;
        if (counted > max_len) break;
        ++counts[s];
      }
    }
  }
  return counts;
}

// Exact EM update by enumerating every segmentation of every word.
inline std::vector<double> brute_force_em(const std::vector<std::pair<std::string, std::uint64_t>>& words,
                                          const std::vector<std::string>& pieces,
                                          const std::vector<double>& probs, double* likelihood = nullptr) {
  std::vector<double> counts(pieces.size(), 0.0);
  double ll = 0.0;
  for (const auto& [word, freq] : words) {
    const auto chars = split_chars(word);
    const std::size_t n = chars.size();
    std::vector<std::pair<double, std::vector<std::size_t>>> segs;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
      double p = 1.0;
      std::vector<std::size_t> used;
      std::size_t start = 0;
      bool ok = true;
      for (std::size_t k = 0; k < n && ok; ++k) {
        if (!(k + 1 == n || ((mask >> k) & 1))) continue;
        std::string s;
        for (std::size_t c = start; c <= k; ++c) s += chars[c];
        ok = false;
        for (std::size_t q = 0; q < pieces.size(); ++q)
          if (pieces[q] == s) {
            ok = true;
            p *= probs[q];
            used.push_back(q);
          }
        start = k + 1;
      }
      if (ok) segs.emplace_back(p, used);
    }
    double z = 0.0;
    for (const auto& s : segs) z += s.first;
    ll += static_cast<double>(freq) * std::log(z);
    for (const auto& [p, used] : segs)
      for (const auto q : used) counts[q] += static_cast<double>(freq) * p / z;
  }
  double total = 0.0;
  for (const double c : counts) total += c;
  for (double& c : counts) c /= total;
  if (likelihood) *likelihood = ll;
  return counts;
}

}  // namespace vtt::testing
