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
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vtt/error.hpp"
#include "vtt/overlap.hpp"
#include "vtt/parallel.hpp"
#include "vtt/random.hpp"
#include "vtt/segment.hpp"
#include "vtt/tensor.hpp"
#include "vtt/vocab.hpp"

namespace vtt {

enum class Strategy { Swap, SwapInsert, MeanInit, Expand, FactorizedExpand };

inline std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Swap: return "swap";
    case Strategy::SwapInsert: return "swap-insert";
    case Strategy::MeanInit: return "mean";
    case Strategy::Expand: return "expand";
    case Strategy::FactorizedExpand: return "factorized";
  }
  return "swap";
}

inline std::optional<Strategy> parse_strategy(std::string_view s) {
  for (const Strategy st : {Strategy::Swap, Strategy::SwapInsert, Strategy::MeanInit, Strategy::Expand,
                            Strategy::FactorizedExpand})
    if (strategy_name(st) == s) return st;
  return std::nullopt;
}

enum class MeanMode { Decompose, Global };

struct TransplantReport {
  Strategy strategy = Strategy::Swap;
  std::uint64_t seed = 0;
  std::size_t inserted = 0;    // rows copied from the pre-trained matrix
  std::size_t randomized = 0;  // rows freshly initialized
  std::size_t mean_fallbacks = 0;  // decompose-mode rows that fell back to the global mean
  std::vector<std::string> matrices;
  OverlapReport overlap;
};

struct SwapOptions {
  bool center = false;  // subtract column means before projecting, add them back after
  int threads = 1;
};

// Rows `w_rows` of (W · E) / sqrt(|V_orig|), where W is the
// |V_new| x |V_orig| standard normal matrix of gaussian_matrix(·, ·, seed).
// W is never materialized; each output row regenerates its W row. Dot products
// accumulate in double and are rounded to float once.
inline TensorF32 swap_rows(const TensorF32& e_orig, const std::vector<std::size_t>& w_rows, std::uint64_t seed,
                           const SwapOptions& opts = {}) {
  const std::size_t n = e_orig.rows;
  const std::size_t d = e_orig.cols;
  if (n == 0) throw DimensionError("swap: '" + e_orig.name + "' has no rows");
  std::vector<double> mean(d, 0.0);
  if (opts.center) {
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < d; ++c) mean[c] += e_orig.at(j, c);
    for (auto& m : mean) m /= static_cast<double>(n);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  TensorF32 out(e_orig.name, w_rows.size(), d);
  parallel_for(w_rows.size(), opts.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(d);
    for (std::size_t r = begin; r < end; ++r) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const std::size_t i = w_rows[r];
      for (std::size_t j = 0; j < n; ++j) {
        const double w = gaussian_entry(seed, i, j, n);
        const float* src = e_orig.data.data() + j * d;
        if (opts.center) {
          for (std::size_t c = 0; c < d; ++c) acc[c] += w * (static_cast<double>(src[c]) - mean[c]);
        } else {
          for (std::size_t c = 0; c < d; ++c) acc[c] += w * static_cast<double>(src[c]);
        }
      }
      float* dst = out.data.data() + r * d;
      for (std::size_t c = 0; c < d; ++c) dst[c] = static_cast<float>(acc[c] * scale + mean[c]);
    }
  });
  return out;
}

// E_new = W · E_orig / sqrt(|V_orig|) with |V_new| = v_new_size rows.
inline TensorF32 swap(const TensorF32& e_orig, std::size_t v_new_size, std::uint64_t seed,
                      const SwapOptions& opts = {}) {
  if (e_orig.rows == 0) throw DimensionError("swap: '" + e_orig.name + "' has no rows");
  std::vector<std::size_t> rows(v_new_size);
  for (std::size_t i = 0; i < v_new_size; ++i) rows[i] = i;
  return swap_rows(e_orig, rows, seed, opts);
}

inline void check_vocab_shapes(const TensorF32& e_new, const TensorF32& e_orig, const Vocabulary& v_orig,
                               const Vocabulary& v_new) {
  if (e_new.cols != e_orig.cols)
    throw DimensionError("column mismatch: '" + e_new.name + "' has " + std::to_string(e_new.cols) + ", '" +
                         e_orig.name + "' has " + std::to_string(e_orig.cols));
  if (e_new.rows != v_new.size())
    throw DimensionError("'" + e_new.name + "' has " + std::to_string(e_new.rows) + " rows, new vocabulary has " +
                         std::to_string(v_new.size()) + " pieces");
  if (e_orig.rows != v_orig.size())
    throw DimensionError("'" + e_orig.name + "' has " + std::to_string(e_orig.rows) +
                         " rows, original vocabulary has " + std::to_string(v_orig.size()) + " pieces");
}

// Row i of the result is row j of e_orig when new piece i matches original
// piece j (text equality; specials by role), otherwise row i of e_new.
inline TensorF32 insert(const TensorF32& e_new, const TensorF32& e_orig, const Vocabulary& v_orig,
                        const Vocabulary& v_new) {
  check_vocab_shapes(e_new, e_orig, v_orig, v_new);
  TensorF32 out = e_new;
  for (const auto& [j, i] : overlap_report(v_orig, v_new).shared) {
    const auto src = e_orig.row(static_cast<std::size_t>(j));
    std::copy(src.begin(), src.end(), out.row(static_cast<std::size_t>(i)).begin());
  }
  return out;
}

// insert(swap(e_orig, |V_new|, seed), ...). Shared rows are never projected
// since insert overwrites them; the result is the same as the composition.
inline std::pair<TensorF32, TransplantReport> swap_and_insert(const TensorF32& e_orig, const Vocabulary& v_orig,
                                                              const Vocabulary& v_new, std::uint64_t seed,
                                                              const SwapOptions& opts = {}) {
  if (e_orig.rows != v_orig.size())
    throw DimensionError("'" + e_orig.name + "' has " + std::to_string(e_orig.rows) +
                         " rows, original vocabulary has " + std::to_string(v_orig.size()) + " pieces");
  TransplantReport report;
  report.strategy = Strategy::SwapInsert;
  report.seed = seed;
  report.matrices = {e_orig.name};
  report.overlap = overlap_report(v_orig, v_new);
  std::vector<char> shared(v_new.size(), 0);
  for (const auto& [j, i] : report.overlap.shared) shared[static_cast<std::size_t>(i)] = 1;
  std::vector<std::size_t> fresh;
  for (std::size_t i = 0; i < v_new.size(); ++i)
    if (!shared[i]) fresh.push_back(i);
  TensorF32 out(e_orig.name, v_new.size(), e_orig.cols);
  if (!fresh.empty()) {
    const TensorF32 projected = swap_rows(e_orig, fresh, seed, opts);
    for (std::size_t r = 0; r < fresh.size(); ++r) {
      const auto src = projected.row(r);
      std::copy(src.begin(), src.end(), out.row(fresh[r]).begin());
    }
  }
  for (const auto& [j, i] : report.overlap.shared) {
    const auto src = e_orig.row(static_cast<std::size_t>(j));
    std::copy(src.begin(), src.end(), out.row(static_cast<std::size_t>(i)).begin());
  }
  report.inserted = report.overlap.total;
  report.randomized = fresh.size();
  return {std::move(out), std::move(report)};
}

// Shared pieces copy their pre-trained row. A new piece gets the mean of the
// e_orig rows of its Viterbi segmentation under v_orig (Decompose), or the
// column mean of all of e_orig (Global). Decompose falls back to the global
// mean for pieces v_orig cannot segment, for byte pieces and for specials.
inline std::pair<TensorF32, TransplantReport> mean_init(const TensorF32& e_orig, const Vocabulary& v_orig,
                                                        const Vocabulary& v_new,
                                                        MeanMode mode = MeanMode::Decompose) {
  if (e_orig.rows != v_orig.size() || e_orig.rows == 0)
    throw DimensionError("'" + e_orig.name + "' has " + std::to_string(e_orig.rows) +
                         " rows, original vocabulary has " + std::to_string(v_orig.size()) + " pieces");
  const std::size_t d = e_orig.cols;
  TransplantReport report;
  report.strategy = Strategy::MeanInit;
  report.matrices = {e_orig.name};
  report.overlap = overlap_report(v_orig, v_new);

  std::vector<double> global(d, 0.0);
  for (std::size_t j = 0; j < e_orig.rows; ++j)
    for (std::size_t c = 0; c < d; ++c) global[c] += e_orig.at(j, c);
  for (auto& g : global) g /= static_cast<double>(e_orig.rows);

  TensorF32 out(e_orig.name, v_new.size(), d);
  std::vector<char> shared(v_new.size(), 0);
  for (const auto& [j, i] : report.overlap.shared) {
    shared[static_cast<std::size_t>(i)] = 1;
    const auto src = e_orig.row(static_cast<std::size_t>(j));
    std::copy(src.begin(), src.end(), out.row(static_cast<std::size_t>(i)).begin());
  }
  const Segmenter seg(v_orig);
  std::vector<double> acc(d);
  for (std::size_t i = 0; i < v_new.size(); ++i) {
    if (shared[i]) continue;
    ++report.randomized;
    const Piece& p = v_new.pieces()[i];
    std::vector<int> parts;
    if (mode == MeanMode::Decompose) {
      if (p.kind == PieceKind::Normal) {
        try {
          parts = seg.segment_pieces(p.text).ids;
        } catch (const SegmentError&) {
        }
      }
      if (parts.empty()) ++report.mean_fallbacks;
    }
    auto dst = out.row(i);
    if (parts.empty()) {
      for (std::size_t c = 0; c < d; ++c) dst[c] = static_cast<float>(global[c]);
      continue;
    }
    std::fill(acc.begin(), acc.end(), 0.0);
    for (const int j : parts) {
      const auto src = e_orig.row(static_cast<std::size_t>(j));
      for (std::size_t c = 0; c < d; ++c) acc[c] += src[c];
    }
    for (std::size_t c = 0; c < d; ++c) dst[c] = static_cast<float>(acc[c] / static_cast<double>(parts.size()));
  }
  report.inserted = report.overlap.total;
  return {std::move(out), std::move(report)};
}

enum class ExpandInit { SwapInsert, Mean };

struct ExpandResult {
  Vocabulary vocab;
  TensorF32 matrix;
  TransplantReport report;
};

// v_orig followed by the pieces of v_new that v_orig lacks (v_new order).
// Appended pieces keep their v_new log_probs and all non-special log_probs are
// renormalized; with nothing to append v_orig is returned untouched.
inline Vocabulary expanded_vocab(const Vocabulary& v_orig, const Vocabulary& v_new) {
  std::vector<Piece> pieces = v_orig.pieces();
  const std::size_t before = pieces.size();
  for (std::size_t i = 0; i < v_new.size(); ++i)
    if (!match_in(v_orig, v_new, static_cast<int>(i))) pieces.push_back(v_new.pieces()[i]);
  if (pieces.size() == before) return v_orig;
  normalize_log_probs(pieces);
  return Vocabulary(std::move(pieces));
}

// Keeps every original id and row bit-exactly and initializes appended rows
// with Swap&Insert (W rows indexed by expanded id) or the decompose mean.
inline ExpandResult expand_vocab(const Vocabulary& v_orig, const Vocabulary& v_new, const TensorF32& e_orig,
                                 ExpandInit init, std::uint64_t seed, const SwapOptions& opts = {}) {
  if (e_orig.rows != v_orig.size())
    throw DimensionError("'" + e_orig.name + "' has " + std::to_string(e_orig.rows) +
                         " rows, original vocabulary has " + std::to_string(v_orig.size()) + " pieces");
  ExpandResult r;
  r.vocab = expanded_vocab(v_orig, v_new);
  r.report.strategy = Strategy::Expand;
  r.report.seed = seed;
  r.report.matrices = {e_orig.name};
  r.report.overlap = overlap_report(v_orig, v_new);
  r.report.inserted = v_orig.size();
  r.report.randomized = r.vocab.size() - v_orig.size();
  if (r.report.randomized == 0) {
    r.matrix = e_orig;
    return r;
  }
  if (init == ExpandInit::SwapInsert) {
    r.matrix = swap_and_insert(e_orig, v_orig, r.vocab, seed, opts).first;
  } else {
    auto [m, rep] = mean_init(e_orig, v_orig, r.vocab, MeanMode::Decompose);
    r.matrix = std::move(m);
    r.report.mean_fallbacks = rep.mean_fallbacks;
  }
  return r;
}

// Fresh factorized vocabulary matrices: E (vocab_size x d_e) and
// W (d_e x d), both with N(0, 1/d_e) entries drawn from seeds seed and
// seed + 1. The effective embedding is E · W.
inline std::pair<TensorF32, TensorF32> factorized_expand(std::size_t vocab_size, std::size_t embed_dim,
                                                         std::size_t d, std::uint64_t seed,
                                                         std::string name = "embed", int threads = 1) {
  if (d < 1 || vocab_size < 1) throw ConfigError("factorized_expand needs vocab_size, d >= 1");
  if (embed_dim < d)
    throw ConfigError("embedding dimension " + std::to_string(embed_dim) + " is smaller than d = " +
                      std::to_string(d));
  const double scale = 1.0 / std::sqrt(static_cast<double>(embed_dim));
  auto draw = [&](std::string n, std::size_t rows, std::size_t cols, std::uint64_t s) {
    TensorF32 t(std::move(n), rows, cols);
    parallel_for(rows, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i)
        for (std::size_t j = 0; j < cols; ++j) t.at(i, j) = static_cast<float>(gaussian_at(s, i * cols + j) * scale);
    });
    return t;
  };
  return {draw(name, vocab_size, embed_dim, seed), draw(name + ".proj", embed_dim, d, seed + 1)};
}

inline std::uint64_t factorized_param_count(std::uint64_t vocab_size, std::uint64_t embed_dim, std::uint64_t d) {
  return vocab_size * embed_dim + embed_dim * d;
}

// a · b with double accumulation.
inline TensorF32 matmul(const TensorF32& a, const TensorF32& b, std::string name = "product") {
  if (a.cols != b.rows)
    throw DimensionError("matmul: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) + " times " +
                         std::to_string(b.rows) + "x" + std::to_string(b.cols));
  TensorF32 out(std::move(name), a.rows, b.cols);
  std::vector<double> acc(b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double x = a.at(i, k);
      const float* brow = b.data.data() + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) acc[j] += x * brow[j];
    }
    for (std::size_t j = 0; j < b.cols; ++j) out.at(i, j) = static_cast<float>(acc[j]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint-level transplant

struct TransplantConfig {
  Strategy strategy = Strategy::SwapInsert;
  std::uint64_t seed = 0;
  MeanMode mean_mode = MeanMode::Decompose;
  ExpandInit expand_init = ExpandInit::SwapInsert;
  bool center = false;
  bool shared_output_seed = false;  // use `seed` for the output matrix too
  std::size_t embed_dim = 0;        // FactorizedExpand only
  bool stamp_metadata = true;       // record strategy/seed/vocab hashes in the checkpoint
  int threads = 1;
};

struct TransplantOutput {
  Checkpoint checkpoint;
  TransplantReport report;
  Vocabulary vocab;  // vocabulary the new matrices are indexed by
};

inline constexpr std::string_view kEmbedTensor = "embed";
inline constexpr std::string_view kOutputTensor = "output";

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Transforms "embed" and, when present, "output" (a checkpoint without
// "output" is treated as tied). The output matrix uses seed + 1 (seed + 2 for
// the factorized strategy, whose embedding already consumes seed and seed + 1)
// unless shared_output_seed is set. Every other tensor is copied unchanged and
// in place.
inline TransplantOutput transplant_checkpoint(const Checkpoint& ckpt, const Vocabulary& v_orig,
                                              const Vocabulary& v_new, const TransplantConfig& cfg) {
  const TensorF32* embed = ckpt.find(kEmbedTensor);
  if (!embed) throw ValidationError("checkpoint has no 'embed' tensor");
  const TensorF32* output = ckpt.find(kOutputTensor);
  for (const TensorF32* t : {embed, output}) {
    if (!t) continue;
    if (t->rows != v_orig.size())
      throw ValidationError("tensor '" + t->name + "' has " + std::to_string(t->rows) +
                            " rows but the original vocabulary has " + std::to_string(v_orig.size()) + " pieces");
    if (t->cols != embed->cols)
      throw ValidationError("tensor '" + t->name + "' has " + std::to_string(t->cols) + " columns, expected " +
                            std::to_string(embed->cols));
    if (!t->all_finite()) throw ValidationError("tensor '" + t->name + "' contains non-finite values");
  }
  if (cfg.strategy == Strategy::FactorizedExpand && cfg.embed_dim < embed->cols)
    throw ConfigError("factorized strategy needs embed_dim >= " + std::to_string(embed->cols));

  const SwapOptions opts{cfg.center, cfg.threads};
  TransplantOutput result;
  result.report.strategy = cfg.strategy;
  result.report.seed = cfg.seed;
  result.report.overlap = overlap_report(v_orig, v_new);
  result.vocab = cfg.strategy == Strategy::Expand ? expanded_vocab(v_orig, v_new) : v_new;

  auto transform = [&](const TensorF32& m, std::uint64_t seed) -> std::vector<TensorF32> {
    switch (cfg.strategy) {
      case Strategy::Swap: {
        result.report.randomized = v_new.size();
        result.report.inserted = 0;
        return {swap(m, v_new.size(), seed, opts)};
      }
      case Strategy::SwapInsert: {
        auto [t, rep] = swap_and_insert(m, v_orig, v_new, seed, opts);
        result.report.inserted = rep.inserted;
        result.report.randomized = rep.randomized;
        return {std::move(t)};
      }
      case Strategy::MeanInit: {
        auto [t, rep] = mean_init(m, v_orig, v_new, cfg.mean_mode);
        result.report.inserted = rep.inserted;
        result.report.randomized = rep.randomized;
        result.report.mean_fallbacks = rep.mean_fallbacks;
        return {std::move(t)};
      }
      case Strategy::Expand: {
        auto r = expand_vocab(v_orig, v_new, m, cfg.expand_init, seed, opts);
        result.report.inserted = r.report.inserted;
        result.report.randomized = r.report.randomized;
        result.report.mean_fallbacks = r.report.mean_fallbacks;
        return {std::move(r.matrix)};
      }
      case Strategy::FactorizedExpand: {
        auto [e, w] = factorized_expand(v_new.size(), cfg.embed_dim, m.cols, seed, m.name, cfg.threads);
        result.report.inserted = 0;
        result.report.randomized = v_new.size();
        return {std::move(e), std::move(w)};
      }
    }
    return {};
  };

  const std::uint64_t output_seed =
      cfg.shared_output_seed ? cfg.seed : cfg.seed + (cfg.strategy == Strategy::FactorizedExpand ? 2 : 1);
  for (const TensorF32& t : ckpt.tensors) {
    if (&t == embed || &t == output) {
      for (auto& produced : transform(t, &t == embed ? cfg.seed : output_seed)) {
        result.report.matrices.push_back(produced.name);
        result.checkpoint.tensors.push_back(std::move(produced));
      }
    } else {
      result.checkpoint.tensors.push_back(t);
    }
  }
  result.checkpoint.metadata = ckpt.metadata;
  if (cfg.stamp_metadata) {
    result.checkpoint.set_meta("strategy", std::string(strategy_name(cfg.strategy)));
    result.checkpoint.set_meta("seed", std::to_string(cfg.seed));
    result.checkpoint.set_meta("orig_vocab_hash", hex64(vocab_fingerprint(v_orig)));
    result.checkpoint.set_meta("vocab_hash", hex64(vocab_fingerprint(result.vocab)));
  }
  return result;
}

}  // namespace vtt
