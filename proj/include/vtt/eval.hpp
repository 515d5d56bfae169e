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
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtt/error.hpp"
#include "vtt/parallel.hpp"
#include "vtt/segment.hpp"
#include "vtt/vocab.hpp"

namespace vtt {

struct EvalTask {
  std::string prompt;
  std::vector<std::string> candidates;
  std::size_t gold = 0;
};

enum class Norm { PerToken, PerByte, None };

inline std::string_view norm_name(Norm n) {
  switch (n) {
    case Norm::PerToken: return "per_token";
    case Norm::PerByte: return "per_byte";
    case Norm::None: return "none";
  }
  return "per_token";
}

inline std::optional<Norm> parse_norm(std::string_view s) {
  for (const Norm n : {Norm::PerToken, Norm::PerByte, Norm::None})
    if (norm_name(n) == s) return n;
  return std::nullopt;
}

// Token-level scorer. Returns one log-probability per continuation token.
// Backends that condition on context see the prompt's token ids; they must
// not assume the continuation was tokenized jointly with the prompt.
class LMBackend {
 public:
  virtual ~LMBackend() = default;
  virtual std::vector<double> token_logprobs(std::span<const int> context, std::span<const int> continuation) = 0;
  virtual bool thread_safe() const { return false; }
};

// Context-free unigram LM: every token scores its vocabulary log_prob.
class UnigramBackend final : public LMBackend {
 public:
  explicit UnigramBackend(const Vocabulary& vocab) : vocab_(&vocab) {}

  std::vector<double> token_logprobs(std::span<const int>, std::span<const int> continuation) override {
    std::vector<double> out;
    out.reserve(continuation.size());
    for (const int id : continuation) out.push_back(vocab_->piece(id).log_prob);
    return out;
  }
  bool thread_safe() const override { return true; }

 private:
  const Vocabulary* vocab_;
};

namespace detail {

inline double normalize_score(double total, std::size_t tokens, std::size_t bytes, Norm norm) {
  switch (norm) {
    case Norm::PerToken: return total / static_cast<double>(tokens);
    case Norm::PerByte: return total / static_cast<double>(bytes);
    case Norm::None: return total;
  }
  return total;
}

inline double score_with(LMBackend& lm, const Segmenter& seg, std::string_view prompt, std::string_view candidate,
                         Norm norm) {
  if (candidate.empty()) throw ValidationError("empty candidate");
  const TokenSeq ctx = seg.segment(prompt);
  const TokenSeq cont = seg.segment(candidate);
  if (cont.ids.empty()) throw ValidationError("candidate produced no tokens");
  const auto lps = lm.token_logprobs(ctx.ids, cont.ids);
  if (lps.size() != cont.ids.size())
    throw ValidationError("backend returned " + std::to_string(lps.size()) + " scores for " +
                          std::to_string(cont.ids.size()) + " tokens");
  double total = 0.0;
  for (const double lp : lps) total += lp;
  return normalize_score(total, cont.ids.size(), candidate.size(), norm);
}

}  // namespace detail

// Sum of continuation log-probabilities divided by the candidate's token
// count (PerToken), UTF-8 byte count (PerByte), or left as is (None).
inline double score_candidate(LMBackend& lm, const Vocabulary& vocab, std::string_view prompt,
                              std::string_view candidate, Norm norm = Norm::PerToken) {
  return detail::score_with(lm, Segmenter(vocab), prompt, candidate, norm);
}

struct EvalResult {
  double accuracy = 0.0;
  std::vector<std::size_t> selected;        // argmax candidate per task
  std::vector<std::vector<double>> scores;  // per task, per candidate
};

// Argmax over normalized candidate scores; the lowest index wins ties. Tasks
// are fanned out over `threads` only when the backend is thread-safe.
inline EvalResult eval_task_set(LMBackend& lm, const Vocabulary& vocab, const std::vector<EvalTask>& tasks,
                                Norm norm = Norm::PerToken, int threads = 1) {
  if (tasks.empty()) throw ValidationError("no tasks to evaluate");
  const Segmenter seg(vocab);
  EvalResult r;
  r.selected.assign(tasks.size(), 0);
  r.scores.assign(tasks.size(), {});
  std::mutex lm_mutex;
  const bool concurrent = lm.thread_safe();
  parallel_for(tasks.size(), concurrent ? threads : 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const EvalTask& task = tasks[t];
      auto& scores = r.scores[t];
      for (const auto& cand : task.candidates) {
        if (concurrent) {
          scores.push_back(detail::score_with(lm, seg, task.prompt, cand, norm));
        } else {
          const std::lock_guard lock(lm_mutex);
          scores.push_back(detail::score_with(lm, seg, task.prompt, cand, norm));
        }
      }
      std::size_t best = 0;
      for (std::size_t c = 1; c < scores.size(); ++c)
        if (scores[c] > scores[best]) best = c;
      r.selected[t] = best;
    }
  });
  std::size_t correct = 0;
  for (std::size_t t = 0; t < tasks.size(); ++t)
    if (r.selected[t] == tasks[t].gold) ++correct;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(tasks.size());
  return r;
}

// JSON-lines task file: {"prompt": str, "candidates": [str, ...], "gold": int}
// per line. Blank lines are skipped.
inline std::vector<EvalTask> read_tasks(std::istream& in) {
  std::vector<EvalTask> tasks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("prompt") || !j["prompt"].is_string() || !j.contains("candidates") ||
        !j["candidates"].is_array() || !j.contains("gold") || !j["gold"].is_number_integer())
      throw ParseError(lineno, "expected {\"prompt\": str, \"candidates\": [str], \"gold\": int}");
    EvalTask task;
    task.prompt = j["prompt"].get<std::string>();
    for (const auto& c : j["candidates"]) {
      if (!c.is_string()) throw ParseError(lineno, "candidates must be strings");
      task.candidates.push_back(c.get<std::string>());
      if (task.candidates.back().empty()) throw ParseError(lineno, "empty candidate");
    }
    if (task.candidates.size() < 2) throw ParseError(lineno, "need at least 2 candidates");
    const auto gold = j["gold"].get<long long>();
    if (gold < 0 || static_cast<std::size_t>(gold) >= task.candidates.size())
      throw ParseError(lineno, "gold index " + std::to_string(gold) + " out of range");
    task.gold = static_cast<std::size_t>(gold);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

inline std::vector<EvalTask> load_tasks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open task file '" + path.string() + "'");
  return read_tasks(in);
}

}  // namespace vtt
