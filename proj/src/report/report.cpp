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

#include "rp/report/report.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "rp/core/error.hpp"
#include "rp/core/numfmt.hpp"
#include "rp/core/seeding.hpp"
#include "rp/pipeline/executor.hpp"

namespace rp::report {

using pipeline::EvaluatorMode;
using json = nlohmann::json;

namespace {

std::optional<pipeline::CacheRecord> current(const pipeline::RunCache& cache, const std::string& problem_id,
                                             const std::string& stage, std::int64_t candidate,
                                             const std::string& pool_hash) {
  auto record = cache.latest(problem_id, stage, candidate);
  if (record && record->payload.value("pool_hash", "") == pool_hash) return record;
  return std::nullopt;
}

std::string method_name(EvaluatorMode mode) { return "portfolio_" + std::string(pipeline::to_string(mode)); }

double min_score(const ProblemResults& r, std::span<const CandidateId> members) {
  double lowest = 1.0;
  for (const CandidateId id : members) lowest = std::min(lowest, *r.judge_scores[id.value]);
  return lowest;
}

}  // namespace

const std::optional<EvaluatorRanking>& ProblemResults::ranking(EvaluatorMode mode) const {
  return mode == EvaluatorMode::kLlm ? ranking_llm : ranking_genprob;
}

std::vector<std::string> cached_problems(const pipeline::RunCache& cache) { return cache.problems_with("pool"); }

ProblemResults load_results(const pipeline::RunCache& cache, const std::string& problem_id) {
  auto pool = pipeline::load_pool(cache, problem_id);
  if (!pool) throw Error(ErrorCode::kMissingData, "no candidates cached for problem " + problem_id);
  const std::size_t k = pool->candidates.size();
  ProblemResults r{std::move(*pool), std::nullopt, std::nullopt, std::vector<std::optional<double>>(k),
                   std::vector<std::optional<double>>(k), std::vector<std::optional<pipeline::ExecutionResult>>(k)};
  const std::string& hash = r.pool.pool_hash;

  for (const EvaluatorMode mode : {EvaluatorMode::kLlm, EvaluatorMode::kGenProb}) {
    const auto record = current(cache, problem_id, "rank_" + std::string(pipeline::to_string(mode)), -1, hash);
    if (!record) continue;
    std::vector<CandidateId> order;
    for (const json& v : record->payload.at("order")) order.push_back(CandidateId{v.get<std::uint32_t>()});
    (mode == EvaluatorMode::kLlm ? r.ranking_llm : r.ranking_genprob) = EvaluatorRanking(std::move(order));
  }
  for (std::size_t i = 0; i < k; ++i) {
    const auto id = static_cast<std::int64_t>(i);
    if (const auto e = current(cache, problem_id, "evaluate", id, hash)) {
      r.evaluator_means[i] = e->payload.at("mean_score").get<double>();
    }
    if (const auto j = current(cache, problem_id, "judge", id, hash)) {
      r.judge_scores[i] = j->payload.at("normalized_score").get<double>();
    }
    if (const auto x = current(cache, problem_id, "execute", id, hash)) {
      pipeline::ExecutionResult res;
      res.exit_status = x->payload.at("exit_status").get<int>();
      res.stdout_text = x->payload.at("stdout").get<std::string>();
      res.stderr_text = x->payload.at("stderr").get<std::string>();
      res.timed_out = x->payload.at("timed_out").get<bool>();
      res.truncated = x->payload.at("truncated").get<bool>();
      r.executions[i] = std::move(res);
    }
  }
  return r;
}

Portfolio select_portfolio(const ProblemResults& results, const PortfolioRequest& request) {
  if (request.alpha.has_value() == request.size.has_value()) {
    throw Error(ErrorCode::kInvalidArgument, "exactly one of alpha and size must be given");
  }
  const auto& ranking = results.ranking(request.mode);
  if (!ranking) {
    throw Error(ErrorCode::kMissingData, "problem " + results.problem_id() + " has no " +
                                             std::string(pipeline::to_string(request.mode)) +
                                             " ranking; run evaluate for that mode first");
  }
  if (request.alpha) return build_portfolio(*ranking, results.pool.distribution, *request.alpha);
  if (*request.size > ranking->size()) {
    throw Error(ErrorCode::kOutOfRange, "problem " + results.problem_id() + " has " +
                                            std::to_string(ranking->size()) + " candidates, fewer than size " +
                                            std::to_string(*request.size));
  }
  return truncate_ranking(*ranking, results.pool.distribution, *request.size);
}

std::string review_markdown(const ProblemResults& results, const Portfolio& portfolio,
                            const PortfolioRequest& request) {
  std::ostringstream out;
  out << "# Portfolio review: " << results.problem_id() << "\n\n";
  out << "Evaluator: " << pipeline::to_string(request.mode) << "  \n";
  if (request.alpha) {
    out << "Selection: alpha = " << format_double(*request.alpha) << "  \n";
  } else {
    out << "Selection: top " << portfolio.k_star << " by rank  \n";
  }
  out << "Members: " << portfolio.k_star << " of " << portfolio.universe << " candidates, cumulative p = "
      << format_double(portfolio.cumulative_mass) << "\n\n";
  out << "## Problem\n\n" << results.pool.description << "\n";

  for (std::size_t rank = 0; rank < portfolio.members.size(); ++rank) {
    const CandidateId id = portfolio.members[rank];
    const pipeline::UniqueCandidate& c = results.pool.candidates.at(id.value);
    out << "\n## Rank " << rank + 1 << ": candidate " << id.value << "\n\n";
    out << "- p(o): " << format_double(results.pool.distribution[id]) << "\n";
    out << "- mean evaluator score: ";
    if (const auto& m = results.evaluator_means[id.value]) {
      out << format_double(*m) << "\n";
    } else {
      out << "n/a\n";
    }
    out << "- samples merged: " << c.samples.size() << "\n";
    if (!c.is_valid) out << "- invalid: no code block found\n";
    out << "\n### Formulation\n\n" << pipeline::formulation_text(c.raw_text) << "\n";
    out << "\n### Code\n\n```python\n" << c.code;
    if (!c.code.empty() && c.code.back() != '\n') out << "\n";
    out << "```\n";
    out << "\n### Execution output\n\n```\n";
    if (const auto& x = results.executions[id.value]) {
      std::string text = pipeline::describe_execution(*x);
      if (!text.empty() && text.back() != '\n') text.push_back('\n');
      out << text;
    } else {
      out << "(not executed)\n";
    }
    out << "```\n";
  }
  return out.str();
}

std::vector<ReportRow> build_report_rows(const std::vector<ProblemResults>& problems, const ReportOptions& options) {
  if (options.sizes.empty()) throw Error(ErrorCode::kEmptyInput, "no portfolio sizes given");
  std::vector<ReportRow> rows;
  for (const ProblemResults& r : problems) {
    const std::size_t k = r.pool.candidates.size();
    for (std::size_t i = 0; i < k; ++i) {
      if (!r.judge_scores[i]) {
        throw Error(ErrorCode::kMissingData, "problem " + r.problem_id() + " is missing judge scores; run judge first");
      }
    }
    for (const EvaluatorMode mode : options.modes) {
      if (!r.ranking(mode)) {
        throw Error(ErrorCode::kMissingData, "problem " + r.problem_id() + " has no " +
                                                 std::string(pipeline::to_string(mode)) + " ranking");
      }
    }
    for (const std::size_t s : options.sizes) {
      if (s == 0 || s > k) {
        throw Error(ErrorCode::kOutOfRange, "size " + std::to_string(s) + " outside 1.." + std::to_string(k) +
                                                " for problem " + r.problem_id());
      }
      for (const EvaluatorMode mode : options.modes) {
        const Portfolio p = truncate_ranking(*r.ranking(mode), r.pool.distribution, s);
        rows.push_back({r.problem_id(), method_name(mode), s, std::nullopt, min_score(r, p.members)});
      }
      std::mt19937_64 rng(
          stable_seed("baseline|" + r.problem_id() + "|" + std::to_string(s) + "|" + std::to_string(options.seed)));
      std::vector<CandidateId> ids(k);
      for (std::size_t i = 0; i < k; ++i) ids[i] = CandidateId{static_cast<std::uint32_t>(i)};
      for (std::size_t draw = 0; draw < options.baseline_draws; ++draw) {
        // Partial Fisher-Yates over the whole candidate set.
        for (std::size_t i = 0; i < s; ++i) {
          std::uniform_int_distribution<std::size_t> pick(i, k - 1);
          std::swap(ids[i], ids[pick(rng)]);
        }
        rows.push_back({r.problem_id(), "random", s, draw, min_score(r, std::span(ids).first(s))});
      }
    }
  }
  return rows;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "problem_id,method,size,draw,min_judge_score\n";
  for (const ReportRow& row : rows) {
    out << row.problem_id << ',' << row.method << ',' << row.size << ',';
    if (row.draw) out << *row.draw;
    out << ',' << format_double(row.min_judge_score) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing report CSV");
}

std::vector<MethodSummary> summarize(const std::vector<ReportRow>& rows) {
  std::vector<MethodSummary> out;
  auto slot = [&out](const std::string& method) -> MethodSummary& {
    for (auto& m : out) {
      if (m.method == method) return m;
    }
    out.push_back(MethodSummary{method});
    return out.back();
  };
  std::map<std::pair<std::string, std::size_t>, std::pair<double, std::size_t>> random_cells;
  for (const ReportRow& row : rows) {
    MethodSummary& m = slot(row.method);
    ++m.rows;
    m.mean_min_score += row.min_judge_score;
    if (row.method == "random") {
      auto& cell = random_cells[{row.problem_id, row.size}];
      cell.first += row.min_judge_score;
      ++cell.second;
    }
  }
  for (auto& m : out) m.mean_min_score /= static_cast<double>(m.rows);
  for (const ReportRow& row : rows) {
    if (row.method == "random") continue;
    const auto it = random_cells.find({row.problem_id, row.size});
    if (it == random_cells.end()) continue;
    const double random_mean = it->second.first / static_cast<double>(it->second.second);
    MethodSummary& m = slot(row.method);
    ++m.cells;
    if (row.min_judge_score > random_mean) {
      ++m.wins;
    } else if (row.min_judge_score == random_mean) {
      ++m.ties;
    }
  }
  return out;
}

std::string format_summary(const std::vector<MethodSummary>& summary) {
  std::ostringstream out;
  for (const MethodSummary& m : summary) {
    out << m.method << ": mean min judge score " << format_double(m.mean_min_score) << " over " << m.rows
        << " rows";
    if (m.cells > 0) {
      out << "; beats random mean in " << m.wins << "/" << m.cells << " cells ("
          << format_double(static_cast<double>(m.wins) / static_cast<double>(m.cells)) << "), ties " << m.ties;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace rp::report
