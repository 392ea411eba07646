/*
 * Copyright 2026 The Robust Portfolio Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rp/core/portfolio.hpp"
#include "rp/pipeline/backend.hpp"

namespace rp::pipeline {

enum class EvaluatorMode { kLlm, kGenProb };

std::string_view to_string(EvaluatorMode mode);
EvaluatorMode parse_evaluator_mode(std::string_view name);

/// Pulls a 1..100 score out of a free-text reply; the first match wins.
class ScoreParser {
 public:
  static constexpr std::string_view kDefaultPattern = R"(\b(100|[1-9][0-9]?)\b)";

  explicit ScoreParser(std::string pattern = std::string(kDefaultPattern));

  std::optional<int> parse(std::string_view reply) const;
  const std::string& pattern() const { return pattern_; }

 private:
  std::string pattern_;
  std::regex regex_;
};

struct ScoreSheet {
  CandidateId candidate;
  std::vector<int> raw_scores;
  // Mean of raw_scores; 0 when every sample was dropped or the candidate is invalid.
  double mean_score = 0.0;
  // Samples abandoned after exhausting parse retries.
  std::size_t dropped = 0;
};

struct ScoringOptions {
  std::size_t samples = 4;
  // Extra requests per sample when the reply has no parseable score.
  std::size_t parse_retries = 2;
};

/// Scores one prompt `samples` times. Sample s first asks with seed s, then
/// s + samples, s + 2 samples, ... on unparseable replies.
ScoreSheet score_prompt(ChatBackend& backend, const ChatRequest& prompt, CandidateId candidate,
                        const ScoringOptions& options, const ScoreParser& parser);

/// Descending by score; equal scores ordered by a seeded shuffle. Candidates
/// with demote[i] set go after all others.
EvaluatorRanking rank_descending(std::span<const double> scores, std::span<const bool> demote,
                                 std::uint64_t tie_seed);

/// LLM-evaluator ranking: by mean score, invalid candidates last.
EvaluatorRanking rank_by_scores(std::span<const ScoreSheet> sheets, std::span<const bool> valid,
                                std::uint64_t tie_seed);

/// Generator-as-evaluator ranking: by p(o).
EvaluatorRanking rank_by_probability(const GeneratorDistribution& dist, std::uint64_t tie_seed);

}  // namespace rp::pipeline
