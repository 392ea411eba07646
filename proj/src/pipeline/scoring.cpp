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

#include "rp/pipeline/scoring.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <random>

#include "rp/core/error.hpp"

namespace rp::pipeline {

std::string_view to_string(EvaluatorMode mode) {
  return mode == EvaluatorMode::kLlm ? "llm" : "genprob";
}

EvaluatorMode parse_evaluator_mode(std::string_view name) {
  if (name == "llm") return EvaluatorMode::kLlm;
  if (name == "genprob") return EvaluatorMode::kGenProb;
  throw Error(ErrorCode::kInvalidArgument, "unknown evaluator mode '" + std::string(name) + "' (llm or genprob)");
}

ScoreParser::ScoreParser(std::string pattern) : pattern_(std::move(pattern)) {
  try {
    regex_ = std::regex(pattern_, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::kInvalidArgument, "bad score pattern '" + pattern_ + "': " + e.what());
  }
}

std::optional<int> ScoreParser::parse(std::string_view reply) const {
  std::cmatch match;
  const char* begin = reply.data();
  const char* end = reply.data() + reply.size();
  while (std::regex_search(begin, end, match, regex_)) {
    const std::string text = match.size() > 1 && match[1].matched ? match[1].str() : match[0].str();
    try {
      std::size_t used = 0;
      const int value = std::stoi(text, &used);
      if (used == text.size() && value >= 1 && value <= 100) return value;
    } catch (const std::exception&) {
    }
    begin = match[0].second == match[0].first ? match[0].second + 1 : match[0].second;
    if (begin >= end) break;
  }
  return std::nullopt;
}

ScoreSheet score_prompt(ChatBackend& backend, const ChatRequest& prompt, CandidateId candidate,
                        const ScoringOptions& options, const ScoreParser& parser) {
  if (options.samples == 0) throw Error(ErrorCode::kInvalidArgument, "score sample count must be >= 1");
  ScoreSheet sheet;
  sheet.candidate = candidate;
  for (std::size_t s = 0; s < options.samples; ++s) {
    std::optional<int> score;
    for (std::size_t attempt = 0; attempt <= options.parse_retries && !score; ++attempt) {
      ChatRequest request = prompt;
      request.want_logprobs = false;
      request.seed = s + attempt * options.samples;
      score = parser.parse(backend.complete(request).content);
    }
    if (score) {
      sheet.raw_scores.push_back(*score);
    } else {
      ++sheet.dropped;
    }
  }
  if (!sheet.raw_scores.empty()) {
    sheet.mean_score = std::accumulate(sheet.raw_scores.begin(), sheet.raw_scores.end(), 0.0) /
                       static_cast<double>(sheet.raw_scores.size());
  }
  return sheet;
}

EvaluatorRanking rank_descending(std::span<const double> scores, std::span<const bool> demote,
                                 std::uint64_t tie_seed) {
  const std::size_t k = scores.size();
  if (k == 0) throw Error(ErrorCode::kEmptyInput, "nothing to rank");
  if (!demote.empty() && demote.size() != k) {
    throw Error(ErrorCode::kDomainMismatch, "score and validity lists differ in length");
  }
  std::vector<std::uint32_t> priority(k);
  std::iota(priority.begin(), priority.end(), 0U);
  std::mt19937_64 rng(tie_seed);
  std::shuffle(priority.begin(), priority.end(), rng);

  std::vector<std::uint32_t> order(k);
  std::iota(order.begin(), order.end(), 0U);
  std::ranges::sort(order, [&](std::uint32_t a, std::uint32_t b) {
    const bool da = !demote.empty() && demote[a];
    const bool db = !demote.empty() && demote[b];
    if (da != db) return db;
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return priority[a] < priority[b];
  });
  std::vector<CandidateId> ids;
  ids.reserve(k);
  for (auto v : order) ids.push_back(CandidateId{v});
  return EvaluatorRanking(std::move(ids));
}

EvaluatorRanking rank_by_scores(std::span<const ScoreSheet> sheets, std::span<const bool> valid,
                                std::uint64_t tie_seed) {
  if (sheets.size() != valid.size()) {
    throw Error(ErrorCode::kDomainMismatch, "score sheets and validity flags differ in length");
  }
  std::vector<double> scores(sheets.size());
  for (const ScoreSheet& sheet : sheets) {
    if (sheet.candidate.value >= sheets.size()) {
      throw Error(ErrorCode::kDomainMismatch, "score sheet for an unknown candidate");
    }
    scores[sheet.candidate.value] = sheet.mean_score;
  }
  std::unique_ptr<bool[]> demote(new bool[sheets.size()]);
  for (std::size_t i = 0; i < sheets.size(); ++i) {
    demote[i] = !valid[i];
    if (demote[i]) scores[i] = 0.0;
  }
  return rank_descending(scores, std::span<const bool>(demote.get(), sheets.size()), tie_seed);
}

EvaluatorRanking rank_by_probability(const GeneratorDistribution& dist, std::uint64_t tie_seed) {
  return rank_descending(dist.probs(), {}, tie_seed);
}

}  // namespace rp::pipeline
