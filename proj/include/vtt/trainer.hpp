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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "vtt/error.hpp"
#include "vtt/segment.hpp"
#include "vtt/utf8.hpp"
#include "vtt/vocab.hpp"

namespace vtt {

struct TrainerConfig {
  std::size_t max_piece_len = 8;   // characters, not counting a leading "▁"
  std::uint64_t min_freq = 1;      // seed candidates below this are dropped
  double seed_factor = 20.0;       // seed vocabulary size as a multiple of the target
  int em_iterations = 2;           // per pruning round
  double shrink_factor = 0.8;      // fraction of pieces kept per pruning round
  bool byte_fallback = true;
  double byte_fallback_mass = 1e-4;  // total probability reserved for byte pieces
};

struct PieceFreq {
  std::string piece;
  std::uint64_t freq = 0;

  friend bool operator==(const PieceFreq&, const PieceFreq&) = default;
};

// Log-likelihood trace of one pruning round: the corpus log-likelihood before
// each EM iteration followed by the value after the last one.
struct EmRound {
  std::size_t pieces = 0;
  std::vector<double> log_likelihood;
};

struct TrainResult {
  Vocabulary vocab;
  std::vector<EmRound> rounds;
};

// Whitespace-delimited words, each prefixed with "▁", with their counts,
// sorted by word. Throws DecodeError on invalid UTF-8.
inline std::vector<std::pair<std::string, std::uint64_t>> count_corpus_words(std::string_view corpus) {
  utf8::validate(corpus);
  std::unordered_map<std::string, std::uint64_t> counts;
  std::size_t i = 0;
  while (i < corpus.size()) {
    while (i < corpus.size() && is_ascii_space(corpus[i])) ++i;
    const std::size_t start = i;
    while (i < corpus.size() && !is_ascii_space(corpus[i])) ++i;
    if (i > start) {
      std::string w(utf8::kBoundary);
      w.append(corpus.substr(start, i - start));
      ++counts[w];
    }
  }
  std::vector<std::pair<std::string, std::uint64_t>> out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

// Length of [begin, end) in characters for the max_piece_len rule: a leading
// boundary marker does not count unless it stands alone.
inline std::size_t piece_length(std::size_t begin, std::size_t end) {
  const std::size_t n = end - begin;
  return (begin == 0 && n > 1) ? n - 1 : n;
}

inline bool reserved_text(std::string_view s) {
  if (parse_byte_piece(s)) return true;
  for (const auto& [role, text] : kSpecialPieces)
    if (text == s) return true;
  return false;
}

inline void sort_candidates(std::vector<PieceFreq>& c) {
  std::sort(c.begin(), c.end(), [](const PieceFreq& a, const PieceFreq& b) {
    if (a.freq != b.freq) return a.freq > b.freq;
    return a.piece < b.piece;
  });
}

inline std::vector<PieceFreq> enumerate_substrings(
    const std::vector<std::pair<std::string, std::uint64_t>>& words, std::size_t max_len) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& [word, freq] : words) {
    const auto bounds = utf8::char_boundaries(word);
    const std::size_t n = bounds.size() - 1;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j <= n && piece_length(i, j) <= max_len; ++j)
        counts[word.substr(bounds[i], bounds[j] - bounds[i])] += freq;
  }
  std::vector<PieceFreq> out;
  out.reserve(counts.size());
  for (auto& [piece, freq] : counts) out.push_back({piece, freq});
  sort_candidates(out);
  return out;
}

inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

// Unigram model over a fixed word list and a candidate piece set. Each word's
// lattice edges into the candidate set are enumerated once; pruning only
// flips `alive` flags.
class UnigramModel {
 public:
  struct Edge {
    std::uint32_t begin;
    std::uint32_t end;
    int piece;
  };

  UnigramModel(std::vector<std::pair<std::string, std::uint64_t>> words, std::vector<std::string> pieces,
               std::vector<double> log_probs, std::vector<char> required)
      : words_(std::move(words)),
        pieces_(std::move(pieces)),
        log_probs_(std::move(log_probs)),
        required_(std::move(required)),
        alive_(pieces_.size(), 1) {
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
      index_.emplace(pieces_[k], static_cast<int>(k));
      max_chars_ = std::max(max_chars_, utf8::char_count(pieces_[k]));
    }
    edges_.resize(words_.size());
    chars_.resize(words_.size());
    for (std::size_t w = 0; w < words_.size(); ++w) {
      const std::string& word = words_[w].first;
      const auto bounds = utf8::char_boundaries(word);
      const std::size_t n = bounds.size() - 1;
      chars_[w] = static_cast<std::uint32_t>(n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j <= n && j - i <= max_chars_; ++j) {
          const auto it = index_.find(word.substr(bounds[i], bounds[j] - bounds[i]));
          if (it != index_.end())
            edges_[w].push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), it->second});
        }
    }
  }

  std::size_t alive_count() const {
    return static_cast<std::size_t>(std::count(alive_.begin(), alive_.end(), 1));
  }
  const std::vector<std::string>& pieces() const { return pieces_; }
  const std::vector<double>& log_probs() const { return log_probs_; }
  bool alive(std::size_t k) const { return alive_[k] != 0; }

  // Expected piece counts under the current model; returns Σ freq·log Z.
  double expect(std::vector<double>& counts) const {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    counts.assign(pieces_.size(), 0.0);
    double ll = 0.0;
    std::vector<double> alpha, beta;
    for (std::size_t w = 0; w < words_.size(); ++w) {
      const auto& edges = edges_[w];
      const std::size_t n = chars_[w];
      alpha.assign(n + 1, kNegInf);
      beta.assign(n + 1, kNegInf);
      alpha[0] = 0.0;
      beta[n] = 0.0;
      for (const Edge& e : edges)
        if (alive_[static_cast<std::size_t>(e.piece)])
          alpha[e.end] = log_add(alpha[e.end], alpha[e.begin] + log_probs_[static_cast<std::size_t>(e.piece)]);
      for (auto it = edges.rbegin(); it != edges.rend(); ++it)
        if (alive_[static_cast<std::size_t>(it->piece)])
          beta[it->begin] = log_add(beta[it->begin], log_probs_[static_cast<std::size_t>(it->piece)] + beta[it->end]);
      const double z = alpha[n];
      const double freq = static_cast<double>(words_[w].second);
      ll += freq * z;
      for (const Edge& e : edges) {
        const auto k = static_cast<std::size_t>(e.piece);
        if (!alive_[k]) continue;
        counts[k] += freq * std::exp(alpha[e.begin] + log_probs_[k] + beta[e.end] - z);
      }
    }
    return ll;
  }

  // Maximum-likelihood update. Pieces with zero expected count drop out; they
  // carry no probability mass so the likelihood is unchanged.
  void maximize(const std::vector<double>& counts) {
    double total = 0.0;
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
      if (!alive_[k]) continue;
      double c = counts[k];
      if (c <= 0.0 && required_[k]) c = std::numeric_limits<double>::min();
      if (c <= 0.0) {
        alive_[k] = 0;
        continue;
      }
      total += c;
    }
    const double log_total = std::log(total);
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
      if (!alive_[k]) continue;
      const double c = counts[k] > 0.0 ? counts[k] : std::numeric_limits<double>::min();
      log_probs_[k] = std::log(c) - log_total;
    }
  }

  // One EM iteration; returns the log-likelihood of the model it started from.
  double iterate() {
    std::vector<double> counts;
    const double ll = expect(counts);
    maximize(counts);
    return ll;
  }

  // Drops all but the `keep` pieces whose removal would cost the most
  // likelihood. The loss of a piece is its Viterbi frequency times the change
  // in log-probability when its occurrences are re-segmented by the best
  // alternative split of its own text.
  void prune(std::size_t keep) {
    const std::size_t k_total = pieces_.size();
    std::vector<double> vfreq(k_total, 0.0);
    double vsum = 0.0;
    for (std::size_t w = 0; w < words_.size(); ++w) {
      const double freq = static_cast<double>(words_[w].second);
      vsum += freq;
      for (const int k : viterbi(edges_[w], chars_[w], -1)) vfreq[static_cast<std::size_t>(k)] += freq;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < k_total; ++k)
      if (alive_[k]) sum += vfreq[k];
    const double logsum = std::log(sum);

    std::vector<std::pair<double, int>> ranked;
    for (std::size_t k = 0; k < k_total; ++k) {
      if (!alive_[k]) continue;
      double loss;
      if (required_[k]) {
        loss = std::numeric_limits<double>::infinity();
      } else if (vfreq[k] == 0.0) {
        loss = -std::numeric_limits<double>::infinity();
      } else {
        const auto alt = alternatives(static_cast<int>(k));
        const double f = vfreq[k] / vsum;
        const double logprob_sp = std::log(vfreq[k]) - logsum;
        const double logsum_alt = std::log(sum + vfreq[k] * (static_cast<double>(alt.size()) - 1.0));
        double logprob_alt = 0.0;
        for (const int a : alt) logprob_alt += std::log(vfreq[static_cast<std::size_t>(a)] + vfreq[k]) - logsum_alt;
        loss = f * (logprob_sp - logprob_alt);
      }
      ranked.emplace_back(loss, static_cast<int>(k));
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = keep; r < ranked.size(); ++r) alive_[static_cast<std::size_t>(ranked[r].second)] = 0;
    renormalize();
  }

 private:
  void renormalize() {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pieces_.size(); ++k)
      if (alive_[k]) m = std::max(m, log_probs_[k]);
    double s = 0.0;
    for (std::size_t k = 0; k < pieces_.size(); ++k)
      if (alive_[k]) s += std::exp(log_probs_[k] - m);
    const double z = m + std::log(s);
    for (std::size_t k = 0; k < pieces_.size(); ++k)
      if (alive_[k]) log_probs_[k] -= z;
  }

  // Best path over `edges` (sorted by begin) skipping piece `excluded`.
  std::vector<int> viterbi(const std::vector<Edge>& edges, std::size_t n, int excluded) const {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<double> best(n + 1, kNegInf);
    std::vector<int> back(n + 1, -1);
    std::vector<std::uint32_t> from(n + 1, 0);
    best[0] = 0.0;
    for (const Edge& e : edges) {
      const auto k = static_cast<std::size_t>(e.piece);
      if (!alive_[k] || e.piece == excluded || best[e.begin] == kNegInf) continue;
      const double s = best[e.begin] + log_probs_[k];
      if (s > best[e.end]) {
        best[e.end] = s;
        back[e.end] = e.piece;
        from[e.end] = e.begin;
      }
    }
    std::vector<int> path;
    if (best[n] == kNegInf) return path;
    for (std::size_t pos = n; pos > 0; pos = from[pos]) path.push_back(back[pos]);
    std::reverse(path.begin(), path.end());
    return path;
  }

  std::vector<int> alternatives(int k) const {
    const std::string& text = pieces_[static_cast<std::size_t>(k)];
    const auto bounds = utf8::char_boundaries(text);
    const std::size_t n = bounds.size() - 1;
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j <= n; ++j) {
        const auto it = index_.find(text.substr(bounds[i], bounds[j] - bounds[i]));
        if (it != index_.end())
          edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), it->second});
      }
    return viterbi(edges, n, k);
  }

  std::vector<std::pair<std::string, std::uint64_t>> words_;
  std::vector<std::string> pieces_;
  std::vector<double> log_probs_;
  std::vector<char> required_;
  std::vector<char> alive_;
  std::unordered_map<std::string, int> index_;
  std::size_t max_chars_ = 0;
  std::vector<std::vector<Edge>> edges_;
  std::vector<std::uint32_t> chars_;
};

}  // namespace detail

// All substrings of "▁"-prefixed whitespace-delimited words up to
// `max_piece_len` characters (a leading "▁" does not count toward the limit),
// counted per occurrence, with frequency >= min_freq. Sorted by descending
// frequency, ties by byte-wise text order.
inline std::vector<PieceFreq> seed_candidates(std::string_view corpus, std::size_t max_piece_len,
                                              std::uint64_t min_freq) {
  if (max_piece_len < 1) throw ConfigError("max_piece_len must be >= 1");
  auto all = detail::enumerate_substrings(count_corpus_words(corpus), max_piece_len);
  std::erase_if(all, [&](const PieceFreq& c) { return c.freq < min_freq; });
  return all;
}

// Distinct characters of the pretokenized corpus, "▁" included.
inline std::vector<std::string> corpus_characters(
    const std::vector<std::pair<std::string, std::uint64_t>>& words) {
  std::unordered_set<std::string> chars;
  for (const auto& [word, freq] : words) {
    const auto bounds = utf8::char_boundaries(word);
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) chars.insert(word.substr(bounds[i], bounds[i + 1] - bounds[i]));
  }
  std::vector<std::string> out(chars.begin(), chars.end());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::size_t min_vocab_size(std::string_view corpus, const TrainerConfig& cfg = {}) {
  return kSpecialPieces.size() + (cfg.byte_fallback ? 256 : 0) +
         corpus_characters(count_corpus_words(corpus)).size();
}

// Trains a unigram-LM vocabulary of exactly `target_size` pieces: the four
// specials, 256 byte pieces (if enabled), then normal pieces by descending
// log_prob. Each round runs `em_iterations` EM steps and then keeps the top
// `shrink_factor` of pieces by removal loss until the target is reached.
// Single characters are never pruned.
inline TrainResult train_unigram_traced(std::string_view corpus, std::size_t target_size,
                                        const TrainerConfig& cfg = {}) {
  if (cfg.max_piece_len < 1) throw ConfigError("max_piece_len must be >= 1");
  if (cfg.em_iterations < 1) throw ConfigError("em_iterations must be >= 1");
  if (!(cfg.shrink_factor > 0.0 && cfg.shrink_factor < 1.0)) throw ConfigError("shrink_factor must be in (0, 1)");
  if (cfg.byte_fallback && !(cfg.byte_fallback_mass > 0.0 && cfg.byte_fallback_mass < 1.0))
    throw ConfigError("byte_fallback_mass must be in (0, 1)");

  auto words = count_corpus_words(corpus);
  const auto chars = corpus_characters(words);
  const std::size_t reserved = kSpecialPieces.size() + (cfg.byte_fallback ? 256 : 0);
  const std::size_t minimum = reserved + chars.size();
  if (target_size < minimum)
    throw ConfigError("target size " + std::to_string(target_size) + " is below the minimum feasible size " +
                      std::to_string(minimum) + " (specials + bytes + distinct characters)");
  const std::size_t target_normal = target_size - reserved;

  // Seed: every character plus the most frequent longer substrings.
  auto candidates = detail::enumerate_substrings(words, cfg.max_piece_len);
  const std::unordered_set<std::string> char_set(chars.begin(), chars.end());
  const auto seed_limit = std::max<std::size_t>(
      static_cast<std::size_t>(cfg.seed_factor * static_cast<double>(target_size)), target_normal);
  std::vector<std::string> pieces;
  std::vector<std::uint64_t> freqs;
  std::vector<char> required;
  std::size_t multi = 0;
  for (const auto& c : candidates) {
    const bool single = char_set.count(c.piece) > 0;
    if (!single) {
      if (c.freq < cfg.min_freq || detail::reserved_text(c.piece)) continue;
      if (multi + chars.size() >= seed_limit) continue;
      ++multi;
    }
    pieces.push_back(c.piece);
    freqs.push_back(c.freq);
    required.push_back(single ? 1 : 0);
  }
  if (pieces.size() < target_normal)
    throw ConfigError("corpus yields only " + std::to_string(pieces.size() + reserved) +
                      " candidate pieces; cannot reach target size " + std::to_string(target_size));
  const double log_total =
      std::log(static_cast<double>(std::accumulate(freqs.begin(), freqs.end(), std::uint64_t{0})));
  std::vector<double> log_probs;
  for (const auto f : freqs) log_probs.push_back(std::log(static_cast<double>(f)) - log_total);

  detail::UnigramModel model(std::move(words), pieces, std::move(log_probs), std::move(required));
  TrainResult result;
  while (true) {
    EmRound round;
    round.pieces = model.alive_count();
    for (int it = 0; it < cfg.em_iterations; ++it) round.log_likelihood.push_back(model.iterate());
    std::vector<double> scratch;
    round.log_likelihood.push_back(model.expect(scratch));
    result.rounds.push_back(std::move(round));
    const std::size_t alive = model.alive_count();
    if (alive <= target_normal) break;
    const auto shrunk = static_cast<std::size_t>(cfg.shrink_factor * static_cast<double>(alive));
    model.prune(std::max(target_normal, std::min(shrunk, alive - 1)));
  }
  if (model.alive_count() != target_normal)
    throw ConfigError("only " + std::to_string(model.alive_count() + reserved) +
                      " pieces have non-zero probability; cannot reach target size " + std::to_string(target_size));

  std::vector<std::pair<double, std::string>> normal;
  for (std::size_t k = 0; k < model.pieces().size(); ++k)
    if (model.alive(k)) normal.emplace_back(model.log_probs()[k], model.pieces()[k]);
  std::sort(normal.begin(), normal.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<Piece> out = special_pieces();
  double normal_shift = 0.0;
  if (cfg.byte_fallback) {
    auto bytes = byte_pieces(std::log(cfg.byte_fallback_mass / 256.0));
    out.insert(out.end(), bytes.begin(), bytes.end());
    normal_shift = std::log1p(-cfg.byte_fallback_mass);
  }
  for (auto& [lp, text] : normal) out.push_back({std::move(text), lp + normal_shift, PieceKind::Normal});
  result.vocab = Vocabulary(std::move(out));
  return result;
}

inline Vocabulary train_unigram(std::string_view corpus, std::size_t target_size, const TrainerConfig& cfg = {}) {
  return train_unigram_traced(corpus, target_size, cfg).vocab;
}

// Result of a single EM step on explicit words and pieces (no boundary
// markers are added).
struct EmStep {
  std::vector<double> log_probs;  // updated; -inf for pieces that dropped out
  double log_likelihood = 0.0;    // of the input model
};

inline EmStep em_step(const std::vector<std::pair<std::string, std::uint64_t>>& words,
                      const std::vector<std::string>& pieces, const std::vector<double>& log_probs) {
  if (pieces.size() != log_probs.size()) throw DimensionError("pieces and log_probs differ in length");
  detail::UnigramModel model(words, pieces, log_probs, std::vector<char>(pieces.size(), 0));
  EmStep step;
  step.log_likelihood = model.iterate();
  step.log_probs = model.log_probs();
  for (std::size_t k = 0; k < pieces.size(); ++k)
    if (!model.alive(k)) step.log_probs[k] = -std::numeric_limits<double>::infinity();
  return step;
}

}  // namespace vtt
