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
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "vtt/vtt.hpp"

namespace vtt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

inline SegmentMode parse_mode(const std::string& s) {
  if (s == "viterbi") return SegmentMode::Viterbi;
  if (s == "min_token") return SegmentMode::MinToken;
  throw UsageError("--mode must be viterbi or min_token");
}

inline nlohmann::json overlap_json(const OverlapReport& r, bool pairs) {
  nlohmann::json j;
  j["total"] = r.total;
  for (const PieceClass c : kPieceClasses) j[std::string(class_name(c))] = r.count(c);
  if (pairs) {
    j["shared"] = nlohmann::json::array();
    for (const auto& [o, n] : r.shared) j["shared"].push_back({o, n});
  }
  return j;
}

inline nlohmann::json report_json(const TransplantReport& r) {
  nlohmann::json j;
  j["strategy"] = strategy_name(r.strategy);
  j["seed"] = r.seed;
  j["inserted"] = r.inserted;
  j["randomized"] = r.randomized;
  j["mean_fallbacks"] = r.mean_fallbacks;
  j["matrices"] = r.matrices;
  j["overlap"] = overlap_json(r.overlap, false);
  return j;
}

// Runs one CLI invocation. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"vtt: subword vocabulary construction, statistics and embedding transplant"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  int threads = default_threads();
  bool json = false;

  // train-vocab
  auto* train = app.add_subcommand("train-vocab", "Train a unigram-LM vocabulary with byte fallback");
  std::string train_in, train_out, train_trace;
  std::size_t train_size = 0;
  TrainerConfig tcfg;
  bool no_byte_fallback = false;
  train->add_option("--input", train_in, "Training corpus (UTF-8 text, '-' for stdin)")->required();
  train->add_option("--size", train_size, "Target vocabulary size")->required();
  train->add_option("--output", train_out, "Vocabulary TSV to write")->required();
  train->add_option("--max-piece-len", tcfg.max_piece_len, "Longest seed piece in characters")->capture_default_str();
  train->add_option("--min-freq", tcfg.min_freq, "Minimum seed substring frequency")->capture_default_str();
  train->add_option("--seed-factor", tcfg.seed_factor, "Seed vocabulary size / target size")->capture_default_str();
  train->add_option("--em-iters", tcfg.em_iterations, "EM iterations per pruning round")->capture_default_str();
  train->add_option("--shrink", tcfg.shrink_factor, "Fraction of pieces kept per round")->capture_default_str();
  train->add_option("--byte-mass", tcfg.byte_fallback_mass, "Probability mass of byte pieces")->capture_default_str();
  train->add_flag("--no-byte-fallback", no_byte_fallback, "Do not add the 256 byte pieces");
  train->add_option("--trace", train_trace, "Write the EM log-likelihood trace as JSON");

  // tokenize
  auto* tok = app.add_subcommand("tokenize", "Segment text line by line");
  std::string tok_vocab, tok_in = "-", tok_mode = "viterbi";
  bool tok_ids = false;
  tok->add_option("--vocab", tok_vocab, "Vocabulary TSV")->required();
  tok->add_option("--input", tok_in, "Text file ('-' for stdin)")->capture_default_str();
  tok->add_option("--mode", tok_mode, "viterbi or min_token")->capture_default_str();
  tok->add_flag("--ids", tok_ids, "Print token ids instead of pieces");
  tok->add_flag("--json", json, "One JSON object per line");

  // stats
  auto* stats = app.add_subcommand("stats", "Corpus token statistics per vocabulary");
  std::vector<std::string> stats_vocabs;
  std::string stats_in, stats_mode = "viterbi";
  stats->add_option("--vocab", stats_vocabs, "Vocabulary TSV (repeatable)")->required();
  stats->add_option("--input", stats_in, "Corpus file")->required();
  stats->add_option("--mode", stats_mode, "viterbi or min_token")->capture_default_str();
  stats->add_option("--threads", threads, "Worker threads (default $VTT_THREADS or 1)");
  stats->add_flag("--json", json, "JSON lines instead of a table");

  // overlap
  auto* ovl = app.add_subcommand("overlap", "Shared pieces between two vocabularies by class");
  std::string ovl_orig, ovl_new;
  bool ovl_pairs = false;
  ovl->add_option("--orig", ovl_orig, "Original vocabulary TSV")->required();
  ovl->add_option("--new", ovl_new, "New vocabulary TSV")->required();
  ovl->add_flag("--json", json, "JSON output");
  ovl->add_flag("--pairs", ovl_pairs, "Include (orig id, new id) pairs in JSON output");

  // transplant
  auto* tr = app.add_subcommand("transplant", "Rebuild embedding/output matrices for a new vocabulary");
  std::string tr_strategy, tr_orig, tr_new, tr_in, tr_out, tr_report, tr_out_vocab;
  std::string tr_mean_mode = "decompose", tr_expand_init = "swap-insert";
  std::uint64_t tr_seed = 0;
  std::size_t tr_d_embed = 0;
  bool tr_center = false, tr_shared_seed = false, tr_no_stamp = false;
  tr->add_option("--strategy", tr_strategy, "swap | swap-insert | mean | expand | factorized")->required();
  tr->add_option("--seed", tr_seed, "Random seed")->required();
  tr->add_option("--orig-vocab", tr_orig, "Vocabulary of the input checkpoint")->required();
  tr->add_option("--new-vocab", tr_new, "Target vocabulary")->required();
  tr->add_option("--in", tr_in, "Input VTT1 checkpoint")->required();
  tr->add_option("--out", tr_out, "Output VTT1 checkpoint")->required();
  tr->add_option("--report", tr_report, "Write the transplant report as JSON");
  tr->add_option("--out-vocab", tr_out_vocab, "Write the vocabulary of the output checkpoint");
  tr->add_option("--mean-mode", tr_mean_mode, "decompose or global (mean strategy)")->capture_default_str();
  tr->add_option("--expand-init", tr_expand_init, "swap-insert or mean (expand strategy)")->capture_default_str();
  tr->add_option("--d-embed", tr_d_embed, "Embedding dimension (factorized strategy)");
  tr->add_flag("--center", tr_center, "Center columns before the random projection");
  tr->add_flag("--shared-output-seed", tr_shared_seed, "Use the same seed for embed and output");
  tr->add_flag("--no-stamp", tr_no_stamp, "Do not record strategy/seed/hashes in checkpoint metadata");
  tr->add_option("--threads", threads, "Worker threads (default $VTT_THREADS or 1)");

  // params
  auto* par = app.add_subcommand("params", "Parameter accounting");
  std::uint64_t p_layers = 0, p_d = 0, p_vocab = 0, p_de = 0;
  bool p_tied = false;
  par->add_option("--layers", p_layers, "Transformer layers")->required();
  par->add_option("--dmodel", p_d, "Hidden size")->required();
  par->add_option("--vocab", p_vocab, "Vocabulary size")->required();
  par->add_option("--d-embed", p_de, "Factorized embedding dimension");
  par->add_flag("--tied", p_tied, "Embedding and output share one matrix");
  par->add_flag("--json", json, "JSON output");

  // eval
  auto* ev = app.add_subcommand("eval", "Multiple-choice accuracy with the unigram backend");
  std::string ev_vocab, ev_tasks, ev_norm = "per_token";
  ev->add_option("--vocab", ev_vocab, "Vocabulary TSV")->required();
  ev->add_option("--tasks", ev_tasks, "Task JSONL")->required();
  ev->add_option("--norm", ev_norm, "per_token | per_byte | none")->capture_default_str();
  ev->add_option("--threads", threads, "Worker threads (default $VTT_THREADS or 1)");
  ev->add_flag("--json", json, "JSON output with per-task selections");

  // init-checkpoint
  auto* init = app.add_subcommand("init-checkpoint", "Write a random toy checkpoint for a vocabulary");
  std::string init_vocab, init_out;
  std::uint64_t init_seed = 0;
  std::size_t init_d = 0, init_layers = 1;
  double init_std = 0.02;
  bool init_tied = false;
  init->add_option("--vocab", init_vocab, "Vocabulary TSV")->required();
  init->add_option("--dmodel", init_d, "Hidden size")->required();
  init->add_option("--seed", init_seed, "Random seed")->required();
  init->add_option("--out", init_out, "Output VTT1 checkpoint")->required();
  init->add_option("--layers", init_layers, "Number of dummy layer tensors")->capture_default_str();
  init->add_option("--std", init_std, "Standard deviation of entries")->capture_default_str();
  init->add_flag("--tied", init_tied, "Omit the output matrix");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (threads < 1) throw UsageError("--threads must be >= 1");

    if (*train) {
      if (train_size == 0) throw UsageError("--size must be positive");
      tcfg.byte_fallback = !no_byte_fallback;
      const std::string corpus = read_file(train_in);
      const TrainResult result = train_unigram_traced(corpus, train_size, tcfg);
      save_vocab(result.vocab, train_out);
      if (!train_trace.empty()) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : result.rounds) j.push_back({{"pieces", r.pieces}, {"log_likelihood", r.log_likelihood}});
        write_text(train_trace, j.dump(2) + "\n");
      }
      out << "trained " << result.vocab.size() << " pieces in " << result.rounds.size() << " rounds -> "
          << train_out << '\n';
    } else if (*tok) {
      const Vocabulary v = load_vocab(tok_vocab);
      const Segmenter seg(v);
      const SegmentMode mode = parse_mode(tok_mode);
      std::istringstream lines(read_file(tok_in));
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(lines, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        TokenSeq seq;
        try {
          seq = seg.segment(line, mode);
        } catch (const Error& e) {
          throw ParseError(lineno, e.what());
        }
        if (json) {
          nlohmann::json j;
          j["ids"] = seq.ids;
          std::vector<std::string> pieces;
          for (const int id : seq.ids) pieces.push_back(v.piece(id).text);
          j["pieces"] = pieces;
          j["score"] = seq.score;
          out << j.dump() << '\n';
        } else {
          for (std::size_t k = 0; k < seq.ids.size(); ++k) {
            if (k) out << ' ';
            if (tok_ids) out << seq.ids[k];
            else out << v.piece(seq.ids[k]).text;
          }
          out << '\n';
        }
      }
    } else if (*stats) {
      const SegmentMode mode = parse_mode(stats_mode);
      if (!json)
        out << std::left << std::setw(32) << "vocab" << std::right << std::setw(10) << "size" << std::setw(16)
            << "tokens" << std::setw(16) << "bytes" << std::setw(12) << "fertility" << std::setw(12) << "bytes/tok"
            << '\n';
      for (const auto& path : stats_vocabs) {
        const Vocabulary v = load_vocab(path);
        std::ifstream in(stats_in, std::ios::binary);
        if (!in) throw Error("cannot open '" + stats_in + "'");
        const TokenStats s = corpus_stats(v, in, mode, threads);
        if (json) {
          nlohmann::json j;
          j["vocab"] = path;
          j["size"] = v.size();
          j["total_tokens"] = s.total_tokens;
          j["total_bytes"] = s.total_bytes;
          j["total_chars"] = s.total_chars;
          j["total_words"] = s.total_words;
          j["fertility"] = s.fertility();
          j["bytes_per_token"] = s.bytes_per_token();
          out << j.dump() << '\n';
        } else {
          out << std::left << std::setw(32) << path << std::right << std::setw(10) << v.size() << std::setw(16)
              << s.total_tokens << std::setw(16) << s.total_bytes << std::setw(12) << std::fixed
              << std::setprecision(4) << s.fertility() << std::setw(12) << s.bytes_per_token() << '\n'
              << std::defaultfloat;
        }
      }
    } else if (*ovl) {
      const Vocabulary a = load_vocab(ovl_orig);
      const Vocabulary b = load_vocab(ovl_new);
      const OverlapReport r = overlap_report(a, b);
      if (json) {
        out << overlap_json(r, ovl_pairs).dump() << '\n';
      } else {
        out << std::left << std::setw(16) << "class" << std::right << std::setw(10) << "count" << '\n';
        for (const PieceClass c : kPieceClasses)
          out << std::left << std::setw(16) << class_name(c) << std::right << std::setw(10) << r.count(c) << '\n';
        out << std::left << std::setw(16) << "total" << std::right << std::setw(10) << r.total << '\n';
      }
    } else if (*tr) {
      TransplantConfig cfg;
      const auto strategy = parse_strategy(tr_strategy);
      if (!strategy) throw UsageError("unknown --strategy '" + tr_strategy + "'");
      cfg.strategy = *strategy;
      cfg.seed = tr_seed;
      if (tr_mean_mode == "decompose") cfg.mean_mode = MeanMode::Decompose;
      else if (tr_mean_mode == "global") cfg.mean_mode = MeanMode::Global;
      else throw UsageError("--mean-mode must be decompose or global");
      if (tr_expand_init == "swap-insert") cfg.expand_init = ExpandInit::SwapInsert;
      else if (tr_expand_init == "mean") cfg.expand_init = ExpandInit::Mean;
      else throw UsageError("--expand-init must be swap-insert or mean");
      if (cfg.strategy == Strategy::FactorizedExpand && tr_d_embed == 0)
        throw UsageError("--strategy factorized requires --d-embed");
      if (cfg.strategy != Strategy::FactorizedExpand && tr_d_embed != 0)
        throw UsageError("--d-embed only applies to --strategy factorized");
      cfg.embed_dim = tr_d_embed;
      cfg.center = tr_center;
      cfg.shared_output_seed = tr_shared_seed;
      cfg.stamp_metadata = !tr_no_stamp;
      cfg.threads = threads;
      const Vocabulary v_orig = load_vocab(tr_orig);
      const Vocabulary v_new = load_vocab(tr_new);
      const Checkpoint in = read_checkpoint(tr_in);
      const TransplantOutput result = transplant_checkpoint(in, v_orig, v_new, cfg);
      write_checkpoint(result.checkpoint, tr_out);
      if (!tr_out_vocab.empty()) save_vocab(result.vocab, tr_out_vocab);
      const nlohmann::json rj = report_json(result.report);
      if (!tr_report.empty()) write_text(tr_report, rj.dump(2) + "\n");
      out << rj.dump() << '\n';
    } else if (*par) {
      const ParamBreakdown p =
          count_params(p_layers, p_d, p_vocab, p_de ? std::optional<std::uint64_t>(p_de) : std::nullopt, p_tied);
      if (json) {
        out << nlohmann::json{{"internal", p.internal}, {"vocab", p.vocab}, {"total", p.total}}.dump() << '\n';
      } else {
        out << "internal=" << p.internal << " (" << display_millions(p.internal) << ")\n"
            << "vocab=" << p.vocab << " (" << display_millions(p.vocab) << ")\n"
            << "total=" << p.total << " (" << display_millions(p.total) << ")\n";
      }
    } else if (*ev) {
      const auto norm = parse_norm(ev_norm);
      if (!norm) throw UsageError("--norm must be per_token, per_byte or none");
      const Vocabulary v = load_vocab(ev_vocab);
      const auto tasks = load_tasks(ev_tasks);
      UnigramBackend lm(v);
      const EvalResult r = eval_task_set(lm, v, tasks, *norm, threads);
      if (json) {
        out << nlohmann::json{{"tasks", tasks.size()}, {"accuracy", r.accuracy}, {"norm", norm_name(*norm)},
                              {"selected", r.selected}}
                   .dump()
            << '\n';
      } else {
        out << "tasks=" << tasks.size() << " norm=" << norm_name(*norm) << " accuracy=" << r.accuracy << '\n';
      }
    } else if (*init) {
      const Vocabulary v = load_vocab(init_vocab);
      if (init_d == 0) throw UsageError("--dmodel must be positive");
      Checkpoint ck;
      auto scaled = [&](std::string name, std::size_t rows, std::size_t cols, std::uint64_t seed) {
        TensorF32 t = gaussian_matrix(rows, cols, seed, std::move(name), threads);
        for (auto& x : t.data) x = static_cast<float>(x * init_std);
        return t;
      };
      ck.tensors.push_back(scaled("embed", v.size(), init_d, init_seed));
      for (std::size_t l = 0; l < init_layers; ++l)
        ck.tensors.push_back(scaled("layer" + std::to_string(l) + ".attn", init_d, init_d, init_seed + 2 + l));
      if (!init_tied) ck.tensors.push_back(scaled("output", v.size(), init_d, init_seed + 1));
      ck.set_meta("vocab_hash", hex64(vocab_fingerprint(v)));
      write_checkpoint(ck, init_out);
      out << "wrote " << ck.tensors.size() << " tensors -> " << init_out << '\n';
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace vtt::cli
