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

#include "rp/pipeline/stages.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "rp/core/error.hpp"
#include "rp/core/numfmt.hpp"
#include "rp/core/parallel.hpp"
#include "rp/core/seeding.hpp"

namespace rp::pipeline {

using json = nlohmann::json;

namespace {

std::string backend_fingerprint(const BackendConfig& b) {
  return b.model + "|" + format_double(b.temperature) + "|" +
         (b.max_tokens ? std::to_string(*b.max_tokens) : "-") + "|" + b.extra_body.dump();
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

json sheet_payload(const std::string& pool_hash, const ScoreSheet& sheet, bool is_valid) {
  return json{{"pool_hash", pool_hash},
              {"raw_scores", sheet.raw_scores},
              {"mean_score", sheet.mean_score},
              {"dropped", sheet.dropped},
              {"is_valid", is_valid}};
}

ScoreSheet sheet_from_payload(CandidateId id, const json& payload) {
  ScoreSheet sheet;
  sheet.candidate = id;
  sheet.raw_scores = payload.at("raw_scores").get<std::vector<int>>();
  sheet.mean_score = payload.at("mean_score").get<double>();
  sheet.dropped = payload.value("dropped", std::size_t{0});
  return sheet;
}

std::uint64_t tie_seed(const std::string& problem_id, EvaluatorMode mode, std::uint64_t seed) {
  return stable_seed("ties|" + problem_id + "|" + std::string(to_string(mode)) + "|" + std::to_string(seed));
}

}  // namespace

// Counts requests so stages can report backend traffic.
class Pipeline::CountingBackend : public ChatBackend {
 public:
  explicit CountingBackend(std::unique_ptr<ChatBackend> owned) : owned_(std::move(owned)), target_(owned_.get()) {}
  explicit CountingBackend(ChatBackend* borrowed) : target_(borrowed) {}

  ChatReply complete(const ChatRequest& request) override {
    ++count_;
    return target_->complete(request);
  }
  std::size_t parallelism() const override { return target_->parallelism(); }
  std::size_t count() const { return count_.load(); }

 private:
  std::unique_ptr<ChatBackend> owned_;
  ChatBackend* target_;
  std::atomic<std::size_t> count_{0};
};

std::optional<PoolView> load_pool(const RunCache& cache, const std::string& problem_id) {
  const auto record = cache.latest(problem_id, "pool");
  if (!record) return std::nullopt;
  const json& payload = record->payload;
  std::vector<UniqueCandidate> candidates;
  std::vector<double> probs;
  const auto sample_hashes = payload.at("sample_hashes").get<std::vector<std::string>>();
  for (const json& entry : payload.at("candidates")) {
    UniqueCandidate c;
    c.id = CandidateId{entry.at("id").get<std::uint32_t>()};
    c.samples = entry.at("samples").get<std::vector<std::size_t>>();
    c.representative = entry.at("representative").get<std::size_t>();
    c.seq_score = entry.at("seq_score").get<double>();
    c.is_valid = entry.at("is_valid").get<bool>();
    if (c.representative >= sample_hashes.size()) {
      throw Error(ErrorCode::kSchemaViolation, "pool for " + problem_id + " references a missing sample");
    }
    const auto sample = cache.find(sample_hashes[c.representative]);
    if (!sample) {
      throw Error(ErrorCode::kSchemaViolation, "pool for " + problem_id + " references an uncached sample");
    }
    c.raw_text = sample->payload.at("raw_text").get<std::string>();
    c.code = sample->payload.at("code").get<std::string>();
    probs.push_back(entry.at("probability").get<double>());
    candidates.push_back(std::move(c));
  }
  return PoolView{problem_id, payload.at("description").get<std::string>(), record->content_hash,
                  std::move(candidates), GeneratorDistribution(std::move(probs))};
}

Pipeline::Pipeline(PipelineConfig config, RunCache& cache, LogSink log)
    : config_(std::move(config)), cache_(cache), log_(std::move(log)), parser_(config_.score_pattern) {}

Pipeline::~Pipeline() = default;

void Pipeline::set_generator_backend(ChatBackend* backend) {
  generator_ = std::make_unique<CountingBackend>(backend);
}

void Pipeline::set_judge_backend(ChatBackend* backend) { judge_ = std::make_unique<CountingBackend>(backend); }

ChatBackend& Pipeline::generator_backend() {
  if (!generator_) {
    generator_ = std::make_unique<CountingBackend>(std::make_unique<OpenAiBackend>(config_.generator_backend));
  }
  return *generator_;
}

ChatBackend& Pipeline::judge_backend() {
  if (!judge_) judge_ = std::make_unique<CountingBackend>(std::make_unique<OpenAiBackend>(config_.judge_backend));
  return *judge_;
}

void Pipeline::log(const std::string& line) const {
  if (log_) log_(line);
}

template <class Fn>
StageStats Pipeline::run_stage(const char* name, const std::vector<ProblemInstance>& problems, Fn&& fn) {
  StageStats stats;
  const std::size_t before = (generator_ ? generator_->count() : 0) + (judge_ ? judge_->count() : 0);
  for (const ProblemInstance& problem : problems) {
    ++stats.problems;
    const std::size_t written = stats.records_written;
    const std::size_t hits = stats.cache_hits;
    try {
      fn(problem, stats);
      log(std::string("[") + name + "] " + problem.id + ": " + std::to_string(stats.records_written - written) +
          " new, " + std::to_string(stats.cache_hits - hits) + " cached");
    } catch (const Error& e) {
      ++stats.failed_problems;
      stats.failures.push_back(problem.id + ": " + e.what());
      log(std::string("[") + name + "] " + problem.id + ": FAILED: " + e.what());
    }
  }
  const std::size_t after = (generator_ ? generator_->count() : 0) + (judge_ ? judge_->count() : 0);
  stats.backend_requests = after - before;
  return stats;
}

StageStats Pipeline::generate(const std::vector<ProblemInstance>& problems) {
  if (config_.n == 0) throw Error(ErrorCode::kInvalidArgument, "candidate count n must be >= 1");
  return run_stage("generate", problems,
                   [this](const ProblemInstance& p, StageStats& s) { generate_one(p, s); });
}

StageStats Pipeline::evaluate(const std::vector<ProblemInstance>& problems, EvaluatorMode mode) {
  return run_stage("evaluate", problems,
                   [this, mode](const ProblemInstance& p, StageStats& s) { evaluate_one(p, mode, s); });
}

StageStats Pipeline::judge(const std::vector<ProblemInstance>& problems) {
  return run_stage("judge", problems, [this](const ProblemInstance& p, StageStats& s) { judge_one(p, s); });
}

void Pipeline::generate_one(const ProblemInstance& problem, StageStats& stats) {
  const PromptTemplate& tmpl = config_.prompts.generator;
  const std::string fingerprint = backend_fingerprint(config_.generator_backend);
  std::vector<std::string> hashes(config_.n);
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < config_.n; ++i) {
    hashes[i] = content_hash({"generate", problem.id, problem.description, std::to_string(i), fingerprint,
                              tmpl.system, tmpl.user});
    if (cache_.contains(hashes[i])) {
      ++stats.cache_hits;
    } else {
      missing.push_back(i);
    }
  }

  const std::map<std::string, std::string> values{{"description", problem.description}};
  ChatRequest base{render(tmpl.system, values), render(tmpl.user, values), true, std::nullopt, "generate"};
  std::vector<std::optional<GeneratedCandidate>> fresh(missing.size());
  std::mutex error_mutex;
  std::optional<Error> first_error;
  ChatBackend* backend = missing.empty() ? nullptr : &generator_backend();
  parallel_for(missing.size(), backend ? backend->parallelism() : 1, [&](std::size_t j) {
    ChatRequest request = base;
    request.seed = missing[j];
    try {
      ChatReply reply = backend->complete(request);
      fresh[j] = make_candidate(missing[j], std::move(reply.content),
                                std::move(reply.token_logprobs).value_or(std::vector<double>{}));
    } catch (const Error& e) {
      std::lock_guard lock(error_mutex);
      if (!first_error) first_error = e;
    }
  });

  // Successful samples are kept even when others failed.
  for (std::size_t j = 0; j < missing.size(); ++j) {
    if (!fresh[j]) continue;
    const GeneratedCandidate& c = *fresh[j];
    json payload{{"sample_index", c.sample_index}, {"raw_text", c.raw_text},     {"code", c.code},
                 {"token_logprobs", c.token_logprobs}, {"seq_score", c.seq_score}, {"is_valid", c.is_valid}};
    stats.records_written += cache_.append(
        {problem.id, "generate", static_cast<std::int64_t>(c.sample_index), std::move(payload), hashes[missing[j]]});
  }
  if (first_error) throw *first_error;

  std::vector<GeneratedCandidate> samples;
  samples.reserve(config_.n);
  for (std::size_t i = 0; i < config_.n; ++i) {
    const auto record = cache_.find(hashes[i]);
    GeneratedCandidate c;
    c.sample_index = i;
    c.raw_text = record->payload.at("raw_text").get<std::string>();
    c.code = record->payload.at("code").get<std::string>();
    c.token_logprobs = record->payload.at("token_logprobs").get<std::vector<double>>();
    c.seq_score = record->payload.at("seq_score").get<double>();
    c.is_valid = record->payload.at("is_valid").get<bool>();
    samples.push_back(std::move(c));
  }
  const CandidatePool pool = derive_distribution(samples);
  json candidates = json::array();
  for (const UniqueCandidate& u : pool.candidates) {
    candidates.push_back({{"id", u.id.value},
                          {"samples", u.samples},
                          {"representative", u.representative},
                          {"seq_score", u.seq_score},
                          {"probability", pool.distribution[u.id]},
                          {"is_valid", u.is_valid}});
  }
  std::vector<std::string> pool_key{"pool", problem.id, problem.description};
  pool_key.insert(pool_key.end(), hashes.begin(), hashes.end());
  json payload{{"description", problem.description},
               {"n", config_.n},
               {"sample_hashes", hashes},
               {"candidates", std::move(candidates)}};
  const std::string pool_hash = content_hash(pool_key);
  if (cache_.append({problem.id, "pool", -1, std::move(payload), pool_hash})) {
    ++stats.records_written;
  } else if (cache_.latest(problem.id, "pool")->content_hash != pool_hash) {
    throw Error(ErrorCode::kInvalidArgument,
                "problem " + problem.id + " already has a newer candidate pool in this cache; use a fresh cache to "
                "switch back to an earlier configuration");
  }
}

std::vector<std::optional<Pipeline::ExecutionEntry>> Pipeline::ensure_executions(const PoolView& pool,
                                                                                 StageStats& stats) {
  const RunnerConfig& runner = config_.runner;
  const std::string runner_key = join(runner.interpreter, ' ') + "|" + format_double(runner.timeout_s) + "|" +
                                 std::to_string(runner.output_cap);
  std::vector<std::optional<ExecutionEntry>> entries(pool.candidates.size());
  std::vector<std::size_t> missing;
  for (const UniqueCandidate& c : pool.candidates) {
    if (!c.is_valid) continue;
    const std::string hash = content_hash({"execute", pool.pool_hash, std::to_string(c.id.value), c.code, runner_key});
    if (const auto record = cache_.find(hash)) {
      ++stats.cache_hits;
      ExecutionResult r;
      r.exit_status = record->payload.at("exit_status").get<int>();
      r.stdout_text = record->payload.at("stdout").get<std::string>();
      r.stderr_text = record->payload.at("stderr").get<std::string>();
      r.timed_out = record->payload.at("timed_out").get<bool>();
      r.truncated = record->payload.at("truncated").get<bool>();
      entries[c.id.value] = ExecutionEntry{hash, std::move(r)};
    } else {
      entries[c.id.value] = ExecutionEntry{hash, {}};
      missing.push_back(c.id.value);
    }
  }
  parallel_for(missing.size(), config_.jobs, [&](std::size_t j) {
    entries[missing[j]]->result = execute_code(pool.candidates[missing[j]].code, runner);
  });
  for (const std::size_t id : missing) {
    const ExecutionResult& r = entries[id]->result;
    // Wall time is left out so identical runs produce identical caches.
    json payload{{"pool_hash", pool.pool_hash}, {"exit_status", r.exit_status}, {"stdout", r.stdout_text},
                 {"stderr", r.stderr_text},     {"timed_out", r.timed_out},     {"truncated", r.truncated}};
    stats.records_written +=
        cache_.append({pool.problem_id, "execute", static_cast<std::int64_t>(id), std::move(payload), entries[id]->hash});
  }
  return entries;
}

void Pipeline::evaluate_one(const ProblemInstance& problem, EvaluatorMode mode, StageStats& stats) {
  const auto pool = load_pool(cache_, problem.id);
  if (!pool) throw Error(ErrorCode::kMissingData, "no generated candidates cached; run generate first");
  const auto executions = ensure_executions(*pool, stats);
  const std::size_t k = pool->candidates.size();

  std::vector<std::string> rank_key{"rank", std::string(to_string(mode)), pool->pool_hash,
                                    std::to_string(config_.seed)};
  json rank_payload{{"pool_hash", pool->pool_hash}, {"mode", to_string(mode)}, {"seed", config_.seed}};
  std::optional<EvaluatorRanking> ranking;

  if (mode == EvaluatorMode::kGenProb) {
    ranking = rank_by_probability(pool->distribution, tie_seed(problem.id, mode, config_.seed));
  } else {
    const PromptTemplate& tmpl = config_.prompts.evaluator;
    const ScoringOptions& scoring = config_.evaluator_scoring;
    const std::string fingerprint = backend_fingerprint(config_.generator_backend) + "|" +
                                    std::to_string(scoring.samples) + "|" + std::to_string(scoring.parse_retries) +
                                    "|" + parser_.pattern();
    std::vector<std::string> hashes(k);
    std::vector<std::optional<ScoreSheet>> sheets(k);
    std::vector<std::size_t> missing;
    for (const UniqueCandidate& c : pool->candidates) {
      const std::size_t i = c.id.value;
      hashes[i] = content_hash({"evaluate", pool->pool_hash, std::to_string(i),
                                executions[i] ? executions[i]->hash : "invalid", fingerprint, tmpl.system, tmpl.user});
      if (const auto record = cache_.find(hashes[i])) {
        ++stats.cache_hits;
        sheets[i] = sheet_from_payload(c.id, record->payload);
      } else if (!c.is_valid) {
        sheets[i] = ScoreSheet{c.id, {}, 0.0, 0};
        missing.push_back(i);
      } else {
        missing.push_back(i);
      }
    }
    std::vector<std::size_t> to_score;
    for (const std::size_t i : missing) {
      if (!sheets[i]) to_score.push_back(i);
    }
    ChatBackend* backend = to_score.empty() ? nullptr : &generator_backend();
    std::mutex error_mutex;
    std::optional<Error> first_error;
    parallel_for(to_score.size(), backend ? backend->parallelism() : 1, [&](std::size_t j) {
      const UniqueCandidate& c = pool->candidates[to_score[j]];
      const std::map<std::string, std::string> values{{"description", problem.description},
                                                      {"model_text", c.raw_text},
                                                      {"execution_output", describe_execution(executions[c.id.value]->result)}};
      const ChatRequest prompt{render(tmpl.system, values), render(tmpl.user, values), false, std::nullopt, "evaluate"};
      try {
        sheets[c.id.value] = score_prompt(*backend, prompt, c.id, scoring, parser_);
      } catch (const Error& e) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = e;
      }
    });
    for (const std::size_t i : missing) {
      if (!sheets[i]) continue;
      stats.records_written += cache_.append({problem.id, "evaluate", static_cast<std::int64_t>(i),
                                              sheet_payload(pool->pool_hash, *sheets[i], pool->candidates[i].is_valid),
                                              hashes[i]});
    }
    if (first_error) throw *first_error;

    std::vector<ScoreSheet> all;
    std::unique_ptr<bool[]> valid(new bool[k]);
    json means = json::array();
    for (std::size_t i = 0; i < k; ++i) {
      all.push_back(*sheets[i]);
      valid[i] = pool->candidates[i].is_valid;
      means.push_back(sheets[i]->mean_score);
    }
    rank_key.insert(rank_key.end(), hashes.begin(), hashes.end());
    rank_payload["mean_scores"] = std::move(means);
    ranking = rank_by_scores(all, std::span<const bool>(valid.get(), k), tie_seed(problem.id, mode, config_.seed));
  }

  json order = json::array();
  for (const CandidateId id : ranking->order()) order.push_back(id.value);
  rank_payload["order"] = std::move(order);
  const std::string stage = "rank_" + std::string(to_string(mode));
  const std::string hash = content_hash(rank_key);
  if (cache_.append({problem.id, stage, -1, std::move(rank_payload), hash})) {
    ++stats.records_written;
  } else {
    ++stats.cache_hits;
  }
}

void Pipeline::judge_one(const ProblemInstance& problem, StageStats& stats) {
  if (!problem.has_ground_truth()) {
    throw Error(ErrorCode::kMissingGroundTruth, "problem has no ground truth to judge against");
  }
  const auto pool = load_pool(cache_, problem.id);
  if (!pool) throw Error(ErrorCode::kMissingData, "no generated candidates cached; run generate first");
  const auto executions = ensure_executions(*pool, stats);
  const std::size_t k = pool->candidates.size();

  const PromptTemplate& tmpl = config_.prompts.judge;
  const ScoringOptions& scoring = config_.judge_scoring;
  const std::string ground_truth = problem.ground_truth();
  const std::string fingerprint = backend_fingerprint(config_.judge_backend) + "|" + std::to_string(scoring.samples) +
                                  "|" + std::to_string(scoring.parse_retries) + "|" + parser_.pattern();
  std::vector<std::string> hashes(k);
  std::vector<std::optional<ScoreSheet>> sheets(k);
  std::vector<std::size_t> to_score;
  for (const UniqueCandidate& c : pool->candidates) {
    const std::size_t i = c.id.value;
    hashes[i] = content_hash({"judge", pool->pool_hash, std::to_string(i), executions[i] ? executions[i]->hash : "invalid",
                              fingerprint, tmpl.system, tmpl.user, ground_truth});
    if (cache_.contains(hashes[i])) {
      ++stats.cache_hits;
    } else if (!c.is_valid) {
      sheets[i] = ScoreSheet{c.id, {}, 0.0, 0};
    } else {
      to_score.push_back(i);
    }
  }
  ChatBackend* backend = to_score.empty() ? nullptr : &judge_backend();
  std::mutex error_mutex;
  std::optional<Error> first_error;
  parallel_for(to_score.size(), backend ? backend->parallelism() : 1, [&](std::size_t j) {
    const UniqueCandidate& c = pool->candidates[to_score[j]];
    const std::map<std::string, std::string> values{{"description", problem.description},
                                                    {"model_text", c.raw_text},
                                                    {"execution_output", describe_execution(executions[c.id.value]->result)},
                                                    {"ground_truth", ground_truth}};
    const ChatRequest prompt{render(tmpl.system, values), render(tmpl.user, values), false, std::nullopt, "judge"};
    try {
      sheets[c.id.value] = score_prompt(*backend, prompt, c.id, scoring, parser_);
    } catch (const Error& e) {
      std::lock_guard lock(error_mutex);
      if (!first_error) first_error = e;
    }
  });
  for (std::size_t i = 0; i < k; ++i) {
    if (!sheets[i]) continue;
    json payload = sheet_payload(pool->pool_hash, *sheets[i], pool->candidates[i].is_valid);
    payload["normalized_score"] = sheets[i]->mean_score / 100.0;
    stats.records_written +=
        cache_.append({problem.id, "judge", static_cast<std::int64_t>(i), std::move(payload), hashes[i]});
  }
  if (first_error) throw *first_error;
}

}  // namespace rp::pipeline
