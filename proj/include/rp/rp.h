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

#ifndef RP_RP_H_
#define RP_RP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RP_API __declspec(dllexport)
#elif defined(__GNUC__)
#define RP_API __attribute__((visibility("default")))
#else
#define RP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Return codes. Every function returning rp_status leaves a message for
 * rp_last_error() on failure. */
typedef enum rp_status {
  RP_OK = 0,
  RP_ERR_INVALID_ARGUMENT = 1,
  RP_ERR_DOMAIN_MISMATCH = 2,
  RP_ERR_INVALID_ALPHA = 3,
  RP_ERR_INVALID_DISTRIBUTION = 4,
  RP_ERR_OUT_OF_RANGE = 5,
  RP_ERR_INVALID_K = 6,
  RP_ERR_INFEASIBLE_EPSILON = 7,
  RP_ERR_EMPTY_INPUT = 8,
  RP_ERR_SCHEMA_VIOLATION = 9,
  RP_ERR_BACKEND_UNREACHABLE = 10,
  RP_ERR_MISSING_LOGPROBS = 11,
  RP_ERR_RUNNER_MISCONFIGURED = 12,
  RP_ERR_MISSING_GROUND_TRUTH = 13,
  RP_ERR_IO = 14,
  RP_ERR_THEOREM_VIOLATION = 15,
  RP_ERR_MISSING_DATA = 16,
  RP_ERR_INTERNAL = 99
} rp_status;

RP_API const char* rp_version(void);
RP_API const char* rp_status_string(rp_status status);
/* Message of the most recent failed call on this thread; "" after a success. */
RP_API const char* rp_last_error(void);
/* Frees strings returned through char** out-parameters. */
RP_API void rp_string_free(char* s);

/* ---- Portfolios -------------------------------------------------------- */

/* Rankings are arrays of K candidate ids (0..K-1), best first. Probability
 * arrays are indexed by candidate id. */
typedef struct rp_portfolio rp_portfolio;

/* Shortest ranking prefix with cumulative probability >= 1 - alpha. */
RP_API rp_status rp_portfolio_build(const uint32_t* ranking, const double* probs, size_t k, double alpha,
                                    rp_portfolio** out);
/* Top-size prefix of the ranking. */
RP_API rp_status rp_portfolio_truncate(const uint32_t* ranking, const double* probs, size_t k, size_t size,
                                       rp_portfolio** out);
RP_API size_t rp_portfolio_size(const rp_portfolio* p);
RP_API size_t rp_portfolio_universe(const rp_portfolio* p);
RP_API double rp_portfolio_mass(const rp_portfolio* p);
/* Copies the members in rank order; capacity must be >= rp_portfolio_size. */
RP_API rp_status rp_portfolio_members(const rp_portfolio* p, uint32_t* out, size_t capacity);
RP_API rp_status rp_portfolio_coverage(const rp_portfolio* p, const uint32_t* human, size_t k, double* out);
/* (1 - 2 alpha) / k*; RP_ERR_OUT_OF_RANGE for alpha >= 1/2. */
RP_API rp_status rp_portfolio_coverage_bound(const rp_portfolio* p, double* out);
RP_API void rp_portfolio_free(rp_portfolio* p);

RP_API rp_status rp_is_generator_aligned(const double* probs, const uint32_t* human, size_t k, int* out);
RP_API rp_status rp_is_evaluator_aligned(const uint32_t* ranking, const uint32_t* human, size_t k, int* out);

/* ---- Simulation -------------------------------------------------------- */

/* kind: "aligned", "weakly_aligned", "uniform" or "misaligned". out_probs
 * receives k values. */
RP_API rp_status rp_make_generator(const char* kind, size_t k, uint64_t seed, double* out_probs);
/* Misranks ceil(epsilon k) positions of the identity; out_ranking receives k ids. */
RP_API rp_status rp_make_evaluator(double epsilon, size_t k, uint64_t seed, uint32_t* out_ranking);

typedef struct rp_sweep rp_sweep;

typedef struct rp_sweep_record {
  const char* generator; /* static string */
  double epsilon;
  size_t k;
  double alpha;
  size_t seed;
  size_t k_star;
  double coverage;
} rp_sweep_record;

typedef struct rp_theorem_check {
  size_t exact_coverage_checked;
  size_t exact_coverage_violations;
  size_t coverage_bound_checked;
  size_t coverage_bound_violations;
} rp_theorem_check;

RP_API rp_status rp_sweep_create(rp_sweep** out);
RP_API rp_status rp_sweep_add_k(rp_sweep* s, size_t k);
RP_API rp_status rp_sweep_add_generator(rp_sweep* s, const char* kind);
RP_API rp_status rp_sweep_add_epsilon(rp_sweep* s, double epsilon);
/* Explicit alphas replace the step grid. */
RP_API rp_status rp_sweep_add_alpha(rp_sweep* s, double alpha);
RP_API rp_status rp_sweep_set_alpha_step(rp_sweep* s, double step);
RP_API rp_status rp_sweep_set_seeds(rp_sweep* s, size_t seeds);
/* 0 uses every hardware thread; results do not depend on it. */
RP_API rp_status rp_sweep_set_jobs(rp_sweep* s, size_t jobs);
RP_API rp_status rp_sweep_run(rp_sweep* s);
RP_API size_t rp_sweep_record_count(const rp_sweep* s);
RP_API rp_status rp_sweep_get_record(const rp_sweep* s, size_t index, rp_sweep_record* out);
RP_API rp_status rp_sweep_write_csv(const rp_sweep* s, const char* path);
RP_API rp_status rp_sweep_write_aggregate_csv(const rp_sweep* s, const char* path);
RP_API rp_status rp_sweep_theorem_check(const rp_sweep* s, rp_theorem_check* out);
RP_API void rp_sweep_free(rp_sweep* s);

/* ---- LLM pipeline ------------------------------------------------------ */

typedef struct rp_pipeline rp_pipeline;

typedef struct rp_stage_stats {
  size_t problems;
  size_t records_written;
  size_t cache_hits;
  size_t backend_requests;
  size_t failed_problems;
} rp_stage_stats;

typedef void (*rp_log_fn)(const char* line, void* user);

/* dataset_path may be NULL for commands that only read the cache. */
RP_API rp_status rp_pipeline_create(const char* dataset_path, const char* cache_path, rp_pipeline** out);
/* Keys: base_url, model, api_key, temperature, max_tokens, extra_body (JSON
 * object), judge_base_url, judge_model, judge_temperature, n, samples,
 * judge_samples, parse_retries, score_pattern, seed, jobs, parallelism,
 * max_attempts, backoff, request_timeout, templates (directory), interpreter
 * (space separated), timeout, output_cap, work_root, problems (comma
 * separated ids to restrict to). Judge keys default to their generator
 * counterparts. */
RP_API rp_status rp_pipeline_set(rp_pipeline* p, const char* key, const char* value);
RP_API void rp_pipeline_set_logger(rp_pipeline* p, rp_log_fn fn, void* user);

/* Stage calls return RP_OK even when some problems failed; check
 * failed_problems. */
RP_API rp_status rp_pipeline_generate(rp_pipeline* p, rp_stage_stats* out);
/* mode: "llm" or "genprob". */
RP_API rp_status rp_pipeline_evaluate(rp_pipeline* p, const char* mode, rp_stage_stats* out);
RP_API rp_status rp_pipeline_judge(rp_pipeline* p, rp_stage_stats* out);

/* Exactly one of alpha (in (0,1)) and size (>= 1) must be set; pass 0 for the
 * other. problem_id NULL selects every problem. *listing receives one line
 * per problem and *review the markdown review report; either may be NULL. */
RP_API rp_status rp_pipeline_portfolio(rp_pipeline* p, const char* mode, double alpha, size_t size,
                                       const char* problem_id, char** listing, char** review);
/* Writes the baseline comparison CSV and returns the printed summary. */
RP_API rp_status rp_pipeline_report(rp_pipeline* p, const size_t* sizes, size_t n_sizes, size_t draws,
                                    uint64_t seed, const char* csv_path, char** summary);
RP_API void rp_pipeline_free(rp_pipeline* p);

/* ---- Mock backend ------------------------------------------------------ */

typedef struct rp_mock_server rp_mock_server;

/* Serves the fixtures on 127.0.0.1:port (0 picks a free port) from a
 * background thread. */
RP_API rp_status rp_mock_server_start(const char* fixtures_path, int port, rp_mock_server** out);
RP_API int rp_mock_server_port(const rp_mock_server* m);
/* Base URL including the /v1 prefix; owned by the server handle. */
RP_API const char* rp_mock_server_url(const rp_mock_server* m);
RP_API size_t rp_mock_server_request_count(const rp_mock_server* m);
/* Stops serving and frees the handle. */
RP_API void rp_mock_server_stop(rp_mock_server* m);

#ifdef __cplusplus
}
#endif

#endif /* RP_RP_H_ */
