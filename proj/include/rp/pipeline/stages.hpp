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

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rp/pipeline/backend.hpp"
#include "rp/pipeline/cache.hpp"
#include "rp/pipeline/candidate.hpp"
#include "rp/pipeline/dataset.hpp"
#include "rp/pipeline/executor.hpp"
#include "rp/pipeline/scoring.hpp"
#include "rp/pipeline/templates.hpp"

namespace rp::pipeline {

struct PipelineConfig {
  BackendConfig generator_backend;  // generation and LLM evaluation
  BackendConfig judge_backend;
  PromptSet prompts = PromptSet::defaults();
  RunnerConfig runner;
  std::size_t n = 50;
  ScoringOptions evaluator_scoring;
  ScoringOptions judge_scoring;
  std::string score_pattern = std::string(ScoreParser::kDefaultPattern);
  // Drives tie-breaking between equal scores.
  std::uint64_t seed = 0;
  // Concurrent candidate executions.
  std::size_t jobs = 4;
};

struct StageStats {
  std::size_t problems = 0;
  std::size_t records_written = 0;
  std::size_t cache_hits = 0;
  std::size_t backend_requests = 0;
  std::size_t failed_problems = 0;
  std::vector<std::string> failures;
};

/// The most recent deduplicated candidate pool generated for a problem.
struct PoolView {
  std::string problem_id;
  std::string description;
  std::string pool_hash;
  std::vector<UniqueCandidate> candidates;
  GeneratorDistribution distribution;
};

std::optional<PoolView> load_pool(const RunCache& cache, const std::string& problem_id);

using LogSink = std::function<void(const std::string&)>;

/// Runs generate / evaluate / judge over a dataset against a run cache.
/// Stages skip any work whose content hash is already cached, so re-running a
/// stage with unchanged inputs makes no backend calls.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, RunCache& cache, LogSink log = {});
  ~Pipeline();

  // Non-owning overrides; by default HTTP backends are built from the config.
  void set_generator_backend(ChatBackend* backend);
  void set_judge_backend(ChatBackend* backend);

  StageStats generate(const std::vector<ProblemInstance>& problems);
  StageStats evaluate(const std::vector<ProblemInstance>& problems, EvaluatorMode mode);
  StageStats judge(const std::vector<ProblemInstance>& problems);

  const PipelineConfig& config() const { return config_; }

 private:
  class CountingBackend;
  struct ExecutionEntry {
    std::string hash;
    ExecutionResult result;
  };

  ChatBackend& generator_backend();
  ChatBackend& judge_backend();
  void log(const std::string& line) const;
  std::vector<std::optional<ExecutionEntry>> ensure_executions(const PoolView& pool, StageStats& stats);

  void generate_one(const ProblemInstance& problem, StageStats& stats);
  void evaluate_one(const ProblemInstance& problem, EvaluatorMode mode, StageStats& stats);
  void judge_one(const ProblemInstance& problem, StageStats& stats);

  template <class Fn>
  StageStats run_stage(const char* name, const std::vector<ProblemInstance>& problems, Fn&& fn);

  PipelineConfig config_;
  RunCache& cache_;
  LogSink log_;
  ScoreParser parser_;
  std::unique_ptr<CountingBackend> generator_;
  std::unique_ptr<CountingBackend> judge_;
};

}  // namespace rp::pipeline
