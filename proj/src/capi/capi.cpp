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

#include "rp/rp.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rp/core/error.hpp"
#include "rp/core/numfmt.hpp"
#include "rp/core/portfolio.hpp"
#include "rp/pipeline/mock_server.hpp"
#include "rp/pipeline/stages.hpp"
#include "rp/report/report.hpp"
#include "rp/sim/sweep.hpp"

using rp::Error;
using rp::ErrorCode;

struct rp_portfolio {
  rp::Portfolio value;
};

struct rp_sweep {
  rp::sim::SweepConfig config;
  std::vector<rp::sim::SweepRecord> records;
  bool ran = false;
};

struct rp_pipeline {
  std::optional<std::vector<rp::pipeline::ProblemInstance>> dataset;
  std::unique_ptr<rp::pipeline::RunCache> cache;
  rp::pipeline::PipelineConfig config;
  // Judge settings left unset fall back to the generator backend.
  std::optional<std::string> judge_base_url, judge_model;
  std::optional<double> judge_temperature;
  std::vector<std::string> problem_filter;
  rp_log_fn log_fn = nullptr;
  void* log_user = nullptr;
};

struct rp_mock_server {
  std::unique_ptr<rp::pipeline::MockServer> server;
  std::string url;
};

namespace {

thread_local std::string g_last_error;

template <class Fn>
rp_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    g_last_error.clear();
    return RP_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<rp_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return RP_ERR_INTERNAL;
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

std::vector<rp::CandidateId> ids_from(const uint32_t* values, size_t k) {
  std::vector<rp::CandidateId> out(k);
  for (size_t i = 0; i < k; ++i) out[i] = rp::CandidateId{values[i]};
  return out;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != value.size() || value.front() == '-') {
    throw Error(ErrorCode::kInvalidArgument, key + " must be a non-negative integer, got '" + value + "'");
  }
  return static_cast<std::size_t>(v);
}

std::ofstream open_out(const char* path) {
  require(path != nullptr, "output path is null");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, std::string("cannot write ") + path);
  return out;
}

rp::pipeline::PipelineConfig effective_config(const rp_pipeline* p) {
  rp::pipeline::PipelineConfig config = p->config;
  rp::pipeline::BackendConfig judge = config.generator_backend;
  if (p->judge_base_url) judge.base_url = *p->judge_base_url;
  if (p->judge_model) judge.model = *p->judge_model;
  if (p->judge_temperature) judge.temperature = *p->judge_temperature;
  config.judge_backend = judge;
  return config;
}

std::vector<rp::pipeline::ProblemInstance> selected_problems(const rp_pipeline* p) {
  if (!p->dataset) throw Error(ErrorCode::kInvalidArgument, "this command needs a dataset");
  if (p->problem_filter.empty()) return *p->dataset;
  std::vector<rp::pipeline::ProblemInstance> out;
  for (const std::string& id : p->problem_filter) {
    bool found = false;
    for (const auto& problem : *p->dataset) {
      if (problem.id == id) {
        out.push_back(problem);
        found = true;
      }
    }
    if (!found) throw Error(ErrorCode::kInvalidArgument, "problem " + id + " is not in the dataset");
  }
  return out;
}

// Dataset order when a dataset is loaded, otherwise cache order.
std::vector<std::string> report_problem_ids(const rp_pipeline* p) {
  if (!p->problem_filter.empty()) return p->problem_filter;
  if (p->dataset) {
    std::vector<std::string> ids;
    for (const auto& problem : *p->dataset) ids.push_back(problem.id);
    return ids;
  }
  auto ids = rp::report::cached_problems(*p->cache);
  if (ids.empty()) throw Error(ErrorCode::kMissingData, "cache holds no generated candidates");
  return ids;
}

template <class Stage>
rp_status run_stage(rp_pipeline* p, rp_stage_stats* out, Stage&& stage) {
  return guarded([&] {
    require(p != nullptr, "pipeline handle is null");
    const auto problems = selected_problems(p);
    rp::pipeline::LogSink sink;
    if (p->log_fn) {
      sink = [fn = p->log_fn, user = p->log_user](const std::string& line) { fn(line.c_str(), user); };
    }
    rp::pipeline::Pipeline pipeline(effective_config(p), *p->cache, sink);
    const rp::pipeline::StageStats stats = stage(pipeline, problems);
    if (out) {
      *out = rp_stage_stats{stats.problems, stats.records_written, stats.cache_hits, stats.backend_requests,
                            stats.failed_problems};
    }
  });
}

}  // namespace

extern "C" {

const char* rp_version(void) { return "0.1.0"; }

const char* rp_status_string(rp_status status) {
  switch (status) {
    case RP_OK: return "ok";
    case RP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RP_ERR_DOMAIN_MISMATCH: return "domain mismatch";
    case RP_ERR_INVALID_ALPHA: return "invalid alpha";
    case RP_ERR_INVALID_DISTRIBUTION: return "invalid distribution";
    case RP_ERR_OUT_OF_RANGE: return "out of range";
    case RP_ERR_INVALID_K: return "invalid K";
    case RP_ERR_INFEASIBLE_EPSILON: return "infeasible epsilon";
    case RP_ERR_EMPTY_INPUT: return "empty input";
    case RP_ERR_SCHEMA_VIOLATION: return "schema violation";
    case RP_ERR_BACKEND_UNREACHABLE: return "backend unreachable";
    case RP_ERR_MISSING_LOGPROBS: return "missing logprobs";
    case RP_ERR_RUNNER_MISCONFIGURED: return "runner misconfigured";
    case RP_ERR_MISSING_GROUND_TRUTH: return "missing ground truth";
    case RP_ERR_IO: return "i/o error";
    case RP_ERR_THEOREM_VIOLATION: return "theorem violation";
    case RP_ERR_MISSING_DATA: return "missing data";
    case RP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* rp_last_error(void) { return g_last_error.c_str(); }

void rp_string_free(char* s) { std::free(s); }

rp_status rp_portfolio_build(const uint32_t* ranking, const double* probs, size_t k, double alpha,
                             rp_portfolio** out) {
  return guarded([&] {
    require(ranking && probs && out, "null argument");
    rp::EvaluatorRanking r(ids_from(ranking, k));
    rp::GeneratorDistribution d(std::vector<double>(probs, probs + k));
    *out = new rp_portfolio{rp::build_portfolio(r, d, alpha)};
  });
}

rp_status rp_portfolio_truncate(const uint32_t* ranking, const double* probs, size_t k, size_t size,
                                rp_portfolio** out) {
  return guarded([&] {
    require(ranking && probs && out, "null argument");
    rp::EvaluatorRanking r(ids_from(ranking, k));
    rp::GeneratorDistribution d(std::vector<double>(probs, probs + k));
    *out = new rp_portfolio{rp::truncate_ranking(r, d, size)};
  });
}

size_t rp_portfolio_size(const rp_portfolio* p) { return p ? p->value.k_star : 0; }
size_t rp_portfolio_universe(const rp_portfolio* p) { return p ? p->value.universe : 0; }
double rp_portfolio_mass(const rp_portfolio* p) { return p ? p->value.cumulative_mass : 0.0; }

rp_status rp_portfolio_members(const rp_portfolio* p, uint32_t* out, size_t capacity) {
  return guarded([&] {
    require(p && out, "null argument");
    if (capacity < p->value.members.size()) {
      throw Error(ErrorCode::kOutOfRange, "member buffer holds " + std::to_string(capacity) + " of " +
                                              std::to_string(p->value.members.size()));
    }
    for (size_t i = 0; i < p->value.members.size(); ++i) out[i] = p->value.members[i].value;
  });
}

rp_status rp_portfolio_coverage(const rp_portfolio* p, const uint32_t* human, size_t k, double* out) {
  return guarded([&] {
    require(p && human && out, "null argument");
    *out = rp::coverage(p->value, rp::HumanRanking(ids_from(human, k)));
  });
}

rp_status rp_portfolio_coverage_bound(const rp_portfolio* p, double* out) {
  return guarded([&] {
    require(p && out, "null argument");
    *out = rp::coverage_lower_bound(p->value);
  });
}

void rp_portfolio_free(rp_portfolio* p) { delete p; }

rp_status rp_is_generator_aligned(const double* probs, const uint32_t* human, size_t k, int* out) {
  return guarded([&] {
    require(probs && human && out, "null argument");
    *out = rp::is_generator_aligned(rp::GeneratorDistribution(std::vector<double>(probs, probs + k)),
                                    rp::HumanRanking(ids_from(human, k)));
  });
}

rp_status rp_is_evaluator_aligned(const uint32_t* ranking, const uint32_t* human, size_t k, int* out) {
  return guarded([&] {
    require(ranking && human && out, "null argument");
    *out = rp::is_evaluator_aligned(rp::EvaluatorRanking(ids_from(ranking, k)), rp::HumanRanking(ids_from(human, k)));
  });
}

rp_status rp_make_generator(const char* kind, size_t k, uint64_t seed, double* out_probs) {
  return guarded([&] {
    require(kind && out_probs, "null argument");
    const auto dist = rp::sim::make_generator(rp::sim::parse_generator_kind(kind), k, seed);
    std::copy(dist.probs().begin(), dist.probs().end(), out_probs);
  });
}

rp_status rp_make_evaluator(double epsilon, size_t k, uint64_t seed, uint32_t* out_ranking) {
  return guarded([&] {
    require(out_ranking != nullptr, "null argument");
    const auto ranking = rp::sim::make_evaluator(epsilon, k, seed);
    for (size_t i = 0; i < k; ++i) out_ranking[i] = ranking.at_rank(i).value;
  });
}

rp_status rp_sweep_create(rp_sweep** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = new rp_sweep{};
  });
}

rp_status rp_sweep_add_k(rp_sweep* s, size_t k) {
  return guarded([&] {
    require(s != nullptr, "null sweep");
    if (k == 0) throw Error(ErrorCode::kInvalidK, "K must be >= 1");
    s->config.k_values.push_back(k);
  });
}

rp_status rp_sweep_add_generator(rp_sweep* s, const char* kind) {
  return guarded([&] {
    require(s && kind, "null argument");
    s->config.generators.push_back(rp::sim::parse_generator_kind(kind));
  });
}

rp_status rp_sweep_add_epsilon(rp_sweep* s, double epsilon) {
  return guarded([&] {
    require(s != nullptr, "null sweep");
    s->config.epsilons.push_back(epsilon);
  });
}

rp_status rp_sweep_add_alpha(rp_sweep* s, double alpha) {
  return guarded([&] {
    require(s != nullptr, "null sweep");
    s->config.alphas.push_back(alpha);
  });
}

rp_status rp_sweep_set_alpha_step(rp_sweep* s, double step) {
  return guarded([&] {
    require(s != nullptr, "null sweep");
    s->config.alpha_step = step;
  });
}

rp_status rp_sweep_set_seeds(rp_sweep* s, size_t seeds) {
  return guarded([&] {
    require(s != nullptr, "null sweep");
    s->config.seeds = seeds;
  });
}

rp_status rp_sweep_set_jobs(rp_sweep* s, size_t jobs) {
  return guarded([&] {
    require(s != nullptr, "null sweep");
    s->config.jobs = jobs;
  });
}

rp_status rp_sweep_run(rp_sweep* s) {
  return guarded([&] {
    require(s != nullptr, "null sweep");
    s->records = rp::sim::run_sweep(s->config);
    s->ran = true;
  });
}

size_t rp_sweep_record_count(const rp_sweep* s) { return s ? s->records.size() : 0; }

rp_status rp_sweep_get_record(const rp_sweep* s, size_t index, rp_sweep_record* out) {
  return guarded([&] {
    require(s && out, "null argument");
    if (index >= s->records.size()) throw Error(ErrorCode::kOutOfRange, "record index out of range");
    const auto& r = s->records[index];
    *out = rp_sweep_record{rp::sim::to_string(r.generator).data(), r.epsilon, r.k, r.alpha, r.seed, r.k_star,
                           r.coverage};
  });
}

rp_status rp_sweep_write_csv(const rp_sweep* s, const char* path) {
  return guarded([&] {
    require(s != nullptr, "null sweep");
    if (!s->ran) throw Error(ErrorCode::kMissingData, "sweep has not been run");
    auto out = open_out(path);
    rp::sim::write_sweep_csv(out, s->records);
  });
}

rp_status rp_sweep_write_aggregate_csv(const rp_sweep* s, const char* path) {
  return guarded([&] {
    require(s != nullptr, "null sweep");
    if (!s->ran) throw Error(ErrorCode::kMissingData, "sweep has not been run");
    auto out = open_out(path);
    rp::sim::write_aggregate_csv(out, rp::sim::aggregate(s->records));
  });
}

rp_status rp_sweep_theorem_check(const rp_sweep* s, rp_theorem_check* out) {
  return guarded([&] {
    require(s && out, "null argument");
    if (!s->ran) throw Error(ErrorCode::kMissingData, "sweep has not been run");
    const auto check = rp::sim::check_theorems(s->records);
    *out = rp_theorem_check{check.exact_coverage_checked, check.exact_coverage_violations, check.coverage_bound_checked,
                            check.coverage_bound_violations};
  });
}

void rp_sweep_free(rp_sweep* s) { delete s; }

rp_status rp_pipeline_create(const char* dataset_path, const char* cache_path, rp_pipeline** out) {
  return guarded([&] {
    require(cache_path && out, "cache path is required");
    auto p = std::make_unique<rp_pipeline>();
    if (dataset_path != nullptr) p->dataset = rp::pipeline::load_dataset(dataset_path);
    p->cache = std::make_unique<rp::pipeline::RunCache>(cache_path);
    *out = p.release();
  });
}

rp_status rp_pipeline_set(rp_pipeline* p, const char* key_c, const char* value_c) {
  return guarded([&] {
    require(p && key_c && value_c, "null argument");
    const std::string key = key_c;
    const std::string value = value_c;
    auto& c = p->config;
    auto& b = c.generator_backend;
    if (key == "base_url") {
      b.base_url = value;
    } else if (key == "model") {
      b.model = value;
    } else if (key == "api_key") {
      b.api_key = value;
    } else if (key == "temperature") {
      b.temperature = rp::parse_double(value);
    } else if (key == "max_tokens") {
      b.max_tokens = static_cast<int>(parse_count(key, value));
    } else if (key == "extra_body") {
      nlohmann::json extra;
      try {
        extra = nlohmann::json::parse(value);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::kInvalidArgument, std::string("extra_body is not JSON: ") + e.what());
      }
      require(extra.is_object(), "extra_body must be a JSON object");
      b.extra_body = extra;
    } else if (key == "judge_base_url") {
      p->judge_base_url = value;
    } else if (key == "judge_model") {
      p->judge_model = value;
    } else if (key == "judge_temperature") {
      p->judge_temperature = rp::parse_double(value);
    } else if (key == "n") {
      c.n = parse_count(key, value);
      require(c.n >= 1, "n must be >= 1");
    } else if (key == "samples") {
      c.evaluator_scoring.samples = parse_count(key, value);
      require(c.evaluator_scoring.samples >= 1, "samples must be >= 1");
    } else if (key == "judge_samples") {
      c.judge_scoring.samples = parse_count(key, value);
      require(c.judge_scoring.samples >= 1, "judge_samples must be >= 1");
    } else if (key == "parse_retries") {
      c.evaluator_scoring.parse_retries = c.judge_scoring.parse_retries = parse_count(key, value);
    } else if (key == "score_pattern") {
      rp::pipeline::ScoreParser check(value);
      c.score_pattern = value;
    } else if (key == "seed") {
      c.seed = parse_count(key, value);
    } else if (key == "jobs") {
      c.jobs = std::max<std::size_t>(1, parse_count(key, value));
    } else if (key == "parallelism") {
      b.parallelism = std::max<std::size_t>(1, parse_count(key, value));
    } else if (key == "max_attempts") {
      b.max_attempts = static_cast<int>(std::max<std::size_t>(1, parse_count(key, value)));
    } else if (key == "backoff") {
      b.initial_backoff_s = rp::parse_double(value);
      require(b.initial_backoff_s >= 0.0, "backoff must be >= 0");
    } else if (key == "request_timeout") {
      b.request_timeout_s = rp::parse_double(value);
      require(b.request_timeout_s > 0.0, "request_timeout must be > 0");
    } else if (key == "templates") {
      c.prompts = rp::pipeline::PromptSet::load(value);
    } else if (key == "interpreter") {
      c.runner.interpreter = split(value, ' ');
      require(!c.runner.interpreter.empty(), "interpreter is empty");
    } else if (key == "timeout") {
      c.runner.timeout_s = rp::parse_double(value);
      require(c.runner.timeout_s > 0.0, "timeout must be > 0");
    } else if (key == "output_cap") {
      c.runner.output_cap = parse_count(key, value);
    } else if (key == "work_root") {
      c.runner.work_root = value;
    } else if (key == "problems") {
      p->problem_filter = split(value, ',');
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown pipeline setting '" + key + "'");
    }
  });
}

void rp_pipeline_set_logger(rp_pipeline* p, rp_log_fn fn, void* user) {
  if (p == nullptr) return;
  p->log_fn = fn;
  p->log_user = user;
}

rp_status rp_pipeline_generate(rp_pipeline* p, rp_stage_stats* out) {
  return run_stage(p, out, [](rp::pipeline::Pipeline& pl, const auto& problems) { return pl.generate(problems); });
}

rp_status rp_pipeline_evaluate(rp_pipeline* p, const char* mode, rp_stage_stats* out) {
  if (mode == nullptr) {
    g_last_error = "mode is null";
    return RP_ERR_INVALID_ARGUMENT;
  }
  return run_stage(p, out, [mode](rp::pipeline::Pipeline& pl, const auto& problems) {
    return pl.evaluate(problems, rp::pipeline::parse_evaluator_mode(mode));
  });
}

rp_status rp_pipeline_judge(rp_pipeline* p, rp_stage_stats* out) {
  return run_stage(p, out, [](rp::pipeline::Pipeline& pl, const auto& problems) { return pl.judge(problems); });
}

rp_status rp_pipeline_portfolio(rp_pipeline* p, const char* mode, double alpha, size_t size, const char* problem_id,
                                char** listing, char** review_out) {
  return guarded([&] {
    require(p && mode, "null argument");
    rp::report::PortfolioRequest request;
    request.mode = rp::pipeline::parse_evaluator_mode(mode);
    if ((alpha != 0.0) == (size != 0)) {
      throw Error(ErrorCode::kInvalidArgument, "give exactly one of alpha and size");
    }
    if (size != 0) {
      request.size = size;
    } else {
      request.alpha = alpha;
    }
    std::vector<std::string> ids;
    if (problem_id != nullptr) {
      ids.push_back(problem_id);
    } else {
      ids = report_problem_ids(p);
    }
    std::string review;
    std::ostringstream lines;
    for (const std::string& id : ids) {
      const auto results = rp::report::load_results(*p->cache, id);
      const rp::Portfolio portfolio = rp::report::select_portfolio(results, request);
      if (!review.empty()) review += "\n---\n\n";
      review += rp::report::review_markdown(results, portfolio, request);
      lines << id << ": " << portfolio.k_star << " of " << portfolio.universe << " candidates [";
      for (size_t i = 0; i < portfolio.members.size(); ++i) lines << (i ? " " : "") << portfolio.members[i].value;
      lines << "] mass " << rp::format_double(portfolio.cumulative_mass) << "\n";
    }
    if (listing != nullptr) *listing = dup_string(lines.str());
    if (review_out != nullptr) *review_out = dup_string(review);
  });
}

rp_status rp_pipeline_report(rp_pipeline* p, const size_t* sizes, size_t n_sizes, size_t draws, uint64_t seed,
                             const char* csv_path, char** summary) {
  return guarded([&] {
    require(p != nullptr, "null pipeline");
    rp::report::ReportOptions options;
    if (n_sizes > 0) {
      require(sizes != nullptr, "sizes is null");
      options.sizes.assign(sizes, sizes + n_sizes);
    }
    options.baseline_draws = draws;
    options.seed = seed;
    std::vector<rp::report::ProblemResults> results;
    for (const std::string& id : report_problem_ids(p)) results.push_back(rp::report::load_results(*p->cache, id));
    const auto rows = rp::report::build_report_rows(results, options);
    if (csv_path != nullptr) {
      auto out = open_out(csv_path);
      rp::report::write_report_csv(out, rows);
    }
    if (summary != nullptr) *summary = dup_string(rp::report::format_summary(rp::report::summarize(rows)));
  });
}

void rp_pipeline_free(rp_pipeline* p) { delete p; }

rp_status rp_mock_server_start(const char* fixtures_path, int port, rp_mock_server** out) {
  return guarded([&] {
    require(fixtures_path && out, "null argument");
    auto m = std::make_unique<rp_mock_server>();
    m->server = std::make_unique<rp::pipeline::MockServer>(rp::pipeline::MockFixtures::load(fixtures_path));
    m->server->start(port);
    m->url = m->server->base_url();
    *out = m.release();
  });
}

int rp_mock_server_port(const rp_mock_server* m) { return m ? m->server->port() : -1; }
const char* rp_mock_server_url(const rp_mock_server* m) { return m ? m->url.c_str() : ""; }
size_t rp_mock_server_request_count(const rp_mock_server* m) { return m ? m->server->request_count() : 0; }

void rp_mock_server_stop(rp_mock_server* m) {
  if (m == nullptr) return;
  m->server->stop();
  delete m;
}

}  // extern "C"
