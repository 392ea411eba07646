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

#include <doctest.h>

#include <rp/rp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "temp_dir.hpp"

namespace {

const uint32_t kRanking[] = {0, 1, 2, 3};
const double kProbs[] = {0.4, 0.3, 0.2, 0.1};

std::string take(char* s) {
  std::string out = s ? s : "";
  rp_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("status strings and last error") {
  CHECK(std::string(rp_status_string(RP_OK)) == "ok");
  CHECK(std::strlen(rp_version()) > 0);
  rp_portfolio* p = nullptr;
  CHECK(rp_portfolio_build(kRanking, kProbs, 4, 1.5, &p) == RP_ERR_INVALID_ALPHA);
  CHECK(p == nullptr);
  CHECK(std::strlen(rp_last_error()) > 0);
  CHECK(rp_portfolio_build(nullptr, kProbs, 4, 0.25, &p) == RP_ERR_INVALID_ARGUMENT);
  const double bad[] = {0.5, 0.1, 0.1, 0.1};
  CHECK(rp_portfolio_build(kRanking, bad, 4, 0.25, &p) == RP_ERR_INVALID_DISTRIBUTION);
  const uint32_t dup[] = {0, 0, 1, 2};
  CHECK(rp_portfolio_build(dup, kProbs, 4, 0.25, &p) != RP_OK);
  REQUIRE(rp_portfolio_build(kRanking, kProbs, 4, 0.25, &p) == RP_OK);
  CHECK(std::string(rp_last_error()).empty());
  rp_portfolio_free(p);
  rp_portfolio_free(nullptr);
}

TEST_CASE("portfolio through the C interface") {
  rp_portfolio* p = nullptr;
  REQUIRE(rp_portfolio_build(kRanking, kProbs, 4, 0.25, &p) == RP_OK);
  CHECK(rp_portfolio_size(p) == 3);
  CHECK(rp_portfolio_universe(p) == 4);
  CHECK(rp_portfolio_mass(p) == doctest::Approx(0.9));
  uint32_t members[4] = {};
  CHECK(rp_portfolio_members(p, members, 2) == RP_ERR_OUT_OF_RANGE);
  REQUIRE(rp_portfolio_members(p, members, 4) == RP_OK);
  CHECK(members[0] == 0);
  CHECK(members[2] == 2);
  double bound = 0.0;
  REQUIRE(rp_portfolio_coverage_bound(p, &bound) == RP_OK);
  CHECK(bound == doctest::Approx(0.5 / 3.0));
  double cov = 0.0;
  REQUIRE(rp_portfolio_coverage(p, kRanking, 4, &cov) == RP_OK);
  CHECK(cov == 1.0);
  CHECK(rp_portfolio_coverage(p, kRanking, 3, &cov) == RP_ERR_DOMAIN_MISMATCH);
  rp_portfolio_free(p);

  const uint32_t reversed[] = {3, 2, 1, 0};
  const double uniform[] = {0.25, 0.25, 0.25, 0.25};
  REQUIRE(rp_portfolio_build(reversed, uniform, 4, 0.4, &p) == RP_OK);
  CHECK(rp_portfolio_size(p) == 3);
  REQUIRE(rp_portfolio_coverage(p, kRanking, 4, &cov) == RP_OK);
  CHECK(cov == doctest::Approx(2.0 / 3.0));
  CHECK(rp_portfolio_coverage_bound(p, &bound) == RP_OK);
  rp_portfolio_free(p);

  REQUIRE(rp_portfolio_build(kRanking, kProbs, 4, 0.5, &p) == RP_OK);
  CHECK(rp_portfolio_coverage_bound(p, &bound) == RP_ERR_OUT_OF_RANGE);
  rp_portfolio_free(p);

  REQUIRE(rp_portfolio_truncate(reversed, kProbs, 4, 2, &p) == RP_OK);
  REQUIRE(rp_portfolio_members(p, members, 4) == RP_OK);
  CHECK(members[0] == 3);
  CHECK(members[1] == 2);
  CHECK(rp_portfolio_mass(p) == doctest::Approx(0.3));
  rp_portfolio_free(p);
  CHECK(rp_portfolio_truncate(kRanking, kProbs, 4, 5, &p) == RP_ERR_OUT_OF_RANGE);

  int aligned = -1;
  REQUIRE(rp_is_generator_aligned(kProbs, kRanking, 4, &aligned) == RP_OK);
  CHECK(aligned == 1);
  const double rising[] = {0.1, 0.2, 0.3, 0.4};
  REQUIRE(rp_is_generator_aligned(rising, kRanking, 4, &aligned) == RP_OK);
  CHECK(aligned == 0);
  REQUIRE(rp_is_evaluator_aligned(reversed, kRanking, 4, &aligned) == RP_OK);
  CHECK(aligned == 0);
}

TEST_CASE("simulators through the C interface") {
  double probs[4];
  REQUIRE(rp_make_generator("aligned", 4, 0, probs) == RP_OK);
  CHECK(probs[0] == doctest::Approx(0.4));
  CHECK(probs[3] == doctest::Approx(0.1));
  CHECK(rp_make_generator("bogus", 4, 0, probs) == RP_ERR_INVALID_ARGUMENT);
  CHECK(rp_make_generator("aligned", 0, 0, probs) == RP_ERR_INVALID_K);
  uint32_t ranking[4];
  REQUIRE(rp_make_evaluator(1.0, 4, 0, ranking) == RP_OK);
  CHECK(ranking[0] == 3);
  CHECK(ranking[3] == 0);
  CHECK(rp_make_evaluator(1.5, 4, 0, ranking) != RP_OK);
}

TEST_CASE("sweep through the C interface") {
  rp_sweep* s = nullptr;
  REQUIRE(rp_sweep_create(&s) == RP_OK);
  CHECK(rp_sweep_add_generator(s, "nope") == RP_ERR_INVALID_ARGUMENT);
  REQUIRE(rp_sweep_add_k(s, 10) == RP_OK);
  REQUIRE(rp_sweep_add_generator(s, "uniform") == RP_OK);
  REQUIRE(rp_sweep_add_epsilon(s, 0.0) == RP_OK);
  REQUIRE(rp_sweep_add_alpha(s, 0.25) == RP_OK);
  REQUIRE(rp_sweep_set_seeds(s, 1) == RP_OK);
  REQUIRE(rp_sweep_run(s) == RP_OK);
  REQUIRE(rp_sweep_record_count(s) == 1);
  rp_sweep_record rec{};
  REQUIRE(rp_sweep_get_record(s, 0, &rec) == RP_OK);
  CHECK(std::string(rec.generator) == "uniform");
  CHECK(rec.k_star == 8);
  CHECK(rec.coverage == 1.0);
  CHECK(rp_sweep_get_record(s, 1, &rec) == RP_ERR_OUT_OF_RANGE);
  rp_theorem_check check{};
  REQUIRE(rp_sweep_theorem_check(s, &check) == RP_OK);
  CHECK(check.exact_coverage_checked == 1);
  CHECK(check.exact_coverage_violations == 0);

  const TempDir dir;
  REQUIRE(rp_sweep_write_csv(s, (dir / "sweep.csv").c_str()) == RP_OK);
  REQUIRE(rp_sweep_write_aggregate_csv(s, (dir / "agg.csv").c_str()) == RP_OK);
  const std::string csv = read_file(dir / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(rp_sweep_write_csv(s, "/nonexistent/dir/x.csv") == RP_ERR_IO);
  rp_sweep_free(s);
}

TEST_CASE("pipeline through the C interface") {
  const TempDir dir;
  rp_mock_server* mock = nullptr;
  CHECK(rp_mock_server_start("/nonexistent.json", 0, &mock) != RP_OK);
  REQUIRE(rp_mock_server_start(RP_SOURCE_DIR "/tests/fixtures/four_fixtures.json", 0, &mock) == RP_OK);
  CHECK(rp_mock_server_port(mock) > 0);

  const std::string cache = (dir / "cache.jsonl").string();
  rp_pipeline* p = nullptr;
  REQUIRE(rp_pipeline_create(RP_SOURCE_DIR "/tests/fixtures/four.jsonl", cache.c_str(), &p) == RP_OK);
  CHECK(rp_pipeline_set(p, "no_such_key", "1") == RP_ERR_INVALID_ARGUMENT);
  CHECK(rp_pipeline_set(p, "n", "many") == RP_ERR_INVALID_ARGUMENT);
  REQUIRE(rp_pipeline_set(p, "base_url", rp_mock_server_url(mock)) == RP_OK);
  REQUIRE(rp_pipeline_set(p, "judge_base_url", rp_mock_server_url(mock)) == RP_OK);
  REQUIRE(rp_pipeline_set(p, "n", "4") == RP_OK);
  std::vector<std::string> log;
  rp_pipeline_set_logger(
      p, [](const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); }, &log);

  rp_stage_stats stats{};
  REQUIRE(rp_pipeline_generate(p, &stats) == RP_OK);
  CHECK(stats.problems == 1);
  CHECK(stats.backend_requests == 4);
  CHECK(stats.failed_problems == 0);
  CHECK(rp_pipeline_evaluate(p, "sideways", &stats) == RP_ERR_INVALID_ARGUMENT);
  REQUIRE(rp_pipeline_evaluate(p, "genprob", &stats) == RP_OK);
  CHECK(stats.backend_requests == 0);
  REQUIRE(rp_pipeline_evaluate(p, "llm", &stats) == RP_OK);
  REQUIRE(rp_pipeline_judge(p, &stats) == RP_OK);
  CHECK(stats.failed_problems == 0);
  CHECK(!log.empty());

  char* listing = nullptr;
  char* review = nullptr;
  REQUIRE(rp_pipeline_portfolio(p, "genprob", 0.25, 0, nullptr, &listing, &review) == RP_OK);
  const std::string text = take(listing);
  CHECK(text.find("four") != std::string::npos);
  CHECK(take(review).find("## Rank 3: candidate 2") != std::string::npos);
  CHECK(rp_pipeline_portfolio(p, "llm", 0.25, 2, nullptr, &listing, &review) == RP_ERR_INVALID_ARGUMENT);
  CHECK(rp_pipeline_portfolio(p, "llm", 0.0, 100, nullptr, &listing, &review) == RP_ERR_OUT_OF_RANGE);

  const size_t sizes[] = {2};
  char* summary = nullptr;
  const std::string csv = (dir / "report.csv").string();
  REQUIRE(rp_pipeline_report(p, sizes, 1, 30, 7, csv.c_str(), &summary) == RP_OK);
  CHECK(take(summary).find("portfolio_llm") != std::string::npos);
  CHECK(read_file(dir / "report.csv").rfind("problem_id,method,size,draw,min_judge_score\n", 0) == 0);
  rp_pipeline_free(p);
  rp_mock_server_stop(mock);
}
