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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rp/core/portfolio.hpp"

namespace rp::pipeline {

struct ExecutionResult {
  int exit_status = 0;
  std::string stdout_text;
  std::string stderr_text;
  double wall_time_s = 0.0;
  bool timed_out = false;
  // stdout or stderr hit the configured byte cap.
  bool truncated = false;
};

/// One sampled completion from the generator.
struct GeneratedCandidate {
  std::size_t sample_index = 0;
  std::string raw_text;
  // First fenced code block; empty when none was found.
  std::string code;
  std::vector<double> token_logprobs;
  double seq_score = 1.0;
  // False models an invalid generation: it keeps its probability mass but is
  // never executed and scores 0.
  bool is_valid = false;
  std::optional<ExecutionResult> execution;
};

/// exp(mean token log-probability). An empty list scores 1.
double sequence_score(std::span<const double> token_logprobs);

/// Body of the first ``` fenced block (language tag stripped), if any.
std::optional<std::string> extract_code_block(std::string_view text);

/// Text with the first fenced code block removed, trimmed.
std::string formulation_text(std::string_view text);

/// Collapses whitespace runs to one space and trims the ends.
std::string canonicalize_whitespace(std::string_view text);

GeneratedCandidate make_candidate(std::size_t sample_index, std::string raw_text,
                                  std::vector<double> token_logprobs);

/// A distinct candidate after merging samples with identical canonical text.
struct UniqueCandidate {
  CandidateId id;
  std::vector<std::size_t> samples;
  // Sample whose text and seq_score represent the candidate (max seq_score).
  std::size_t representative = 0;
  std::string raw_text;
  std::string code;
  bool is_valid = false;
  double seq_score = 0.0;
};

struct CandidatePool {
  std::vector<UniqueCandidate> candidates;
  GeneratorDistribution distribution;
};

/// Merges duplicates (keeping the max seq_score) and renormalizes seq_score
/// over the distinct candidates. Ids follow first appearance.
CandidatePool derive_distribution(std::span<const GeneratedCandidate> samples);

}  // namespace rp::pipeline
