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
#include <ostream>
#include <string>
#include <vector>

#include "rp/core/portfolio.hpp"
#include "rp/pipeline/cache.hpp"
#include "rp/pipeline/scoring.hpp"
#include "rp/pipeline/stages.hpp"

namespace rp::report {

/// Everything cached for one problem's latest candidate pool.
struct ProblemResults {
  pipeline::PoolView pool;
  std::optional<EvaluatorRanking> ranking_llm;
  std::optional<EvaluatorRanking> ranking_genprob;
  // Per candidate id; nullopt when not cached.
  std::vector<std::optional<double>> evaluator_means;
  std::vector<std::optional<double>> judge_scores;  // normalized to [0,1]
  std::vector<std::optional<pipeline::ExecutionResult>> executions;

  const std::string& problem_id() const { return pool.problem_id; }
  const std::optional<EvaluatorRanking>& ranking(pipeline::EvaluatorMode mode) const;
};

/// Problems with a cached candidate pool, in first-generated order.
std::vector<std::string> cached_problems(const pipeline::RunCache& cache);

/// Throws MissingData when the problem has no cached pool.
ProblemResults load_results(const pipeline::RunCache& cache, const std::string& problem_id);

/// Exactly one of alpha / size must be set.
struct PortfolioRequest {
  pipeline::EvaluatorMode mode = pipeline::EvaluatorMode::kLlm;
  std::optional<double> alpha;
  std::optional<std::size_t> size;
};

Portfolio select_portfolio(const ProblemResults& results, const PortfolioRequest& request);

/// Markdown listing of the members in rank order with p(o), mean evaluator
/// score, formulation, code and execution output.
std::string review_markdown(const ProblemResults& results, const Portfolio& portfolio,
                            const PortfolioRequest& request);

struct ReportRow {
  std::string problem_id;
  std::string method;  // portfolio_llm | portfolio_genprob | random
  std::size_t size = 0;
  std::optional<std::size_t> draw;  // random rows only
  double min_judge_score = 0.0;
};

struct ReportOptions {
  std::vector<std::size_t> sizes{2, 4, 6, 8};
  std::size_t baseline_draws = 30;
  std::uint64_t seed = 0;
  std::vector<pipeline::EvaluatorMode> modes{pipeline::EvaluatorMode::kLlm, pipeline::EvaluatorMode::kGenProb};
};

/// For each problem and size: one portfolio row per mode (rank truncation)
/// and baseline_draws random rows drawn uniformly without replacement.
/// Throws MissingData naming the problem when judge scores or a ranking are
/// missing, and OutOfRange when a size exceeds the candidate count.
std::vector<ReportRow> build_report_rows(const std::vector<ProblemResults>& problems, const ReportOptions& options);

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);

struct MethodSummary {
  std::string method;
  std::size_t rows = 0;
  double mean_min_score = 0.0;
  // Portfolio methods: (problem, size) cells where the portfolio min is
  // above / equal to the mean random min.
  std::size_t cells = 0;
  std::size_t wins = 0;
  std::size_t ties = 0;
};

std::vector<MethodSummary> summarize(const std::vector<ReportRow>& rows);
std::string format_summary(const std::vector<MethodSummary>& summary);

}  // namespace rp::report
