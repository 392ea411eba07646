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

#include "rp/pipeline/candidate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "rp/core/error.hpp"

namespace rp::pipeline {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

struct Fence {
  std::size_t open = std::string_view::npos;  // position of the opening ```
  std::size_t body_begin = 0;
  std::size_t body_end = 0;
  std::size_t close_end = 0;  // one past the closing ```
};

std::optional<Fence> find_fence(std::string_view text) {
  Fence f;
  f.open = text.find("```");
  if (f.open == std::string_view::npos) return std::nullopt;
  const std::size_t line_end = text.find('\n', f.open);
  if (line_end == std::string_view::npos) return std::nullopt;
  f.body_begin = line_end + 1;
  const std::size_t close = text.find("```", f.body_begin);
  if (close == std::string_view::npos) {
    // Unterminated fence: take the rest of the completion.
    f.body_end = text.size();
    f.close_end = text.size();
  } else {
    f.body_end = close;
    f.close_end = close + 3;
  }
  return f;
}

}  // namespace

double sequence_score(std::span<const double> token_logprobs) {
  if (token_logprobs.empty()) return 1.0;
  double sum = 0.0;
  for (const double lp : token_logprobs) {
    if (!std::isfinite(lp)) {
      throw Error(ErrorCode::kInvalidArgument, "token log-probability is not finite");
    }
    // Backends occasionally report +1e-7 for certain tokens.
    sum += std::min(lp, 0.0);
  }
  return std::exp(sum / static_cast<double>(token_logprobs.size()));
}

std::optional<std::string> extract_code_block(std::string_view text) {
  const auto fence = find_fence(text);
  if (!fence) return std::nullopt;
  return std::string(text.substr(fence->body_begin, fence->body_end - fence->body_begin));
}

std::string formulation_text(std::string_view text) {
  const auto fence = find_fence(text);
  if (!fence) return std::string(trim(text));
  std::string out(text.substr(0, fence->open));
  out += text.substr(fence->close_end);
  return std::string(trim(out));
}

std::string canonicalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (const char c : trim(text)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

GeneratedCandidate make_candidate(std::size_t sample_index, std::string raw_text,
                                  std::vector<double> token_logprobs) {
  GeneratedCandidate c;
  c.sample_index = sample_index;
  c.seq_score = sequence_score(token_logprobs);
  if (auto code = extract_code_block(raw_text); code && !trim(*code).empty()) {
    c.code = std::move(*code);
    c.is_valid = true;
  }
  c.raw_text = std::move(raw_text);
  c.token_logprobs = std::move(token_logprobs);
  return c;
}

CandidatePool derive_distribution(std::span<const GeneratedCandidate> samples) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "no candidates to build a distribution from");

  std::vector<UniqueCandidate> unique;
  std::unordered_map<std::string, std::size_t> by_text;
  for (const GeneratedCandidate& s : samples) {
    auto [it, inserted] = by_text.emplace(canonicalize_whitespace(s.raw_text), unique.size());
    if (inserted) {
      UniqueCandidate u;
      u.id = CandidateId{static_cast<std::uint32_t>(unique.size())};
      u.representative = s.sample_index;
      u.raw_text = s.raw_text;
      u.code = s.code;
      u.is_valid = s.is_valid;
      u.seq_score = s.seq_score;
      u.samples.push_back(s.sample_index);
      unique.push_back(std::move(u));
      continue;
    }
    UniqueCandidate& u = unique[it->second];
    u.samples.push_back(s.sample_index);
    if (s.seq_score > u.seq_score) {
      u.seq_score = s.seq_score;
      u.representative = s.sample_index;
      u.raw_text = s.raw_text;
      u.code = s.code;
      u.is_valid = s.is_valid;
    }
  }

  double total = 0.0;
  for (const UniqueCandidate& u : unique) total += u.seq_score;
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kInvalidDistribution, "all sequence scores are zero");
  }
  std::vector<double> probs;
  probs.reserve(unique.size());
  for (const UniqueCandidate& u : unique) probs.push_back(u.seq_score / total);
  return CandidatePool{std::move(unique), GeneratorDistribution(std::move(probs))};
}

}  // namespace rp::pipeline
