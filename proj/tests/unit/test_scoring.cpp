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

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "fake_backend.hpp"
#include "oracles.hpp"
#include "rp/core/error.hpp"
#include "rp/pipeline/cache.hpp"
#include "rp/pipeline/scoring.hpp"
#include "temp_dir.hpp"

using namespace rp;
using namespace rp::pipeline;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint32_t> order_of(const EvaluatorRanking& r) {
  std::vector<std::uint32_t> out;
  for (const CandidateId id : r.order()) out.push_back(id.value);
  return out;
}


}  // namespace

TEST_CASE("score parser") {
  const ScoreParser parser;
  CHECK(parser.parse("Score: 87") == 87);
  CHECK(parser.parse("100") == 100);
  CHECK(parser.parse("I give it 0 then 55") == 55);
  CHECK(parser.parse("rating 250/1000, final 7") == 7);
  CHECK_FALSE(parser.parse("no digits").has_value());
  CHECK_FALSE(parser.parse("101 and 0").has_value());
  const ScoreParser custom(R"(SCORE=(\d+))");
  CHECK(custom.parse("x 5 SCORE=42") == 42);
  CHECK_THROWS_AS(ScoreParser("("), Error);
}

TEST_CASE("evaluator mode names") {
  CHECK(parse_evaluator_mode("llm") == EvaluatorMode::kLlm);
  CHECK(parse_evaluator_mode("genprob") == EvaluatorMode::kGenProb);
  CHECK(to_string(EvaluatorMode::kGenProb) == "genprob");
  CHECK_THROWS_AS(parse_evaluator_mode("judge"), Error);
}

TEST_CASE("ties are broken by the seed") {
  const std::vector<double> scores{90, 75, 75, 10};
  std::set<std::vector<std::uint32_t>> seen;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    const auto order = order_of(rank_descending(scores, {}, seed));
    CHECK(order.front() == 0);
    CHECK(order.back() == 3);
    CHECK(std::set<std::uint32_t>{order[1], order[2]} == std::set<std::uint32_t>{1, 2});
    CHECK(order == order_of(rank_descending(scores, {}, seed)));
    seen.insert(order);
  }
  CHECK(seen.size() == 2);
}

TEST_CASE("genprob ranking sorts by probability") {
  const GeneratorDistribution dist({0.2, 0.5, 0.3});
  CHECK(order_of(rank_by_probability(dist, 0)) == std::vector<std::uint32_t>{1, 2, 0});
}

TEST_CASE("invalid candidates rank last in llm mode") {
  std::vector<ScoreSheet> sheets{{CandidateId{0}, {50}, 50.0, 0},
                                 {CandidateId{1}, {}, 0.0, 0},
                                 {CandidateId{2}, {90}, 90.0, 0},
                                 {CandidateId{3}, {1}, 1.0, 0}};
  const bool valid[] = {true, false, true, true};
  CHECK(order_of(rank_by_scores(sheets, valid, 3)) == std::vector<std::uint32_t>{2, 0, 3, 1});
}

TEST_CASE("genprob ranking gives the maximal-probability prefix") {
  std::mt19937_64 rng(17);
  for (std::size_t k = 1; k <= 8; ++k) {
    for (int trial = 0; trial < 100; ++trial) {
      const auto exact = rp::test::random_grid_distribution(k, 20, rng);
      const GeneratorDistribution dist(exact.as_doubles());
      const double alpha = 0.05 * static_cast<double>(1 + rng() % 19);
      const Portfolio p = build_portfolio(rank_by_probability(dist, rng()), dist, alpha);
      // No subset of size k* - 1 reaches the threshold, so k* is minimal.
      double best_smaller = 0.0;
      for (std::uint32_t mask = 0; mask < (1U << k); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != p.k_star - 1) continue;
        double mass = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          if (mask & (1U << i)) mass += dist.probs()[i];
        }
        best_smaller = std::max(best_smaller, mass);
      }
      CHECK(best_smaller < 1.0 - alpha - kMassTolerance);
      CHECK(p.cumulative_mass >= 1.0 - alpha - kMassTolerance);
    }
  }
}

TEST_CASE("score_prompt averages samples and retries unparseable replies") {
  const ScoreParser parser;
  const ChatRequest prompt{"sys", "user", false, std::nullopt, "evaluate"};
  SUBCASE("canned 80s") {
    ScriptedBackend backend([](const ChatRequest&) { return text_reply("Score: 80"); });
    const ScoreSheet sheet = score_prompt(backend, prompt, CandidateId{4}, {4, 2}, parser);
    CHECK(sheet.raw_scores == std::vector<int>{80, 80, 80, 80});
    CHECK(sheet.mean_score == 80.0);
    CHECK(sheet.candidate.value == 4);
    CHECK(backend.calls() == 4);
  }
  SUBCASE("retry then drop") {
    // Seed 1 never parses; seed 2 parses on its first retry (seed 6).
    ScriptedBackend backend([](const ChatRequest& r) {
      const auto seed = *r.seed;
      if (seed % 4 == 1) return text_reply("unsure");
      if (seed == 2) return text_reply("hmm");
      return text_reply(std::to_string(50 + seed));
    });
    const ScoreSheet sheet = score_prompt(backend, prompt, CandidateId{0}, {4, 2}, parser);
    CHECK(sheet.raw_scores == std::vector<int>{50, 56, 53});
    CHECK(sheet.dropped == 1);
    CHECK(sheet.mean_score == doctest::Approx(53.0));
    CHECK(backend.calls() == 4 + 2 + 1);
  }
  SUBCASE("zero samples") {
    ScriptedBackend backend([](const ChatRequest&) { return text_reply("1"); });
    CHECK_THROWS_AS(score_prompt(backend, prompt, CandidateId{0}, {0, 2}, parser), Error);
  }
}

TEST_CASE("content hash is SHA-256 of unit-separated parts") {
  CHECK(content_hash({"abc"}) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(content_hash({"a", "b"}) != content_hash({"ab"}));
  CHECK(content_hash({"a", "b"}) == content_hash({"a", "b"}));
}

TEST_CASE("run cache appends once and reloads") {
  const TempDir dir;
  const fs::path path = dir / "cache.jsonl";
  {
    RunCache cache(path);
    CHECK(cache.size() == 0);
    CHECK(cache.append({"p1", "generate", 0, {{"x", 1}}, "h1"}));
    CHECK_FALSE(cache.append({"p1", "generate", 0, {{"x", 2}}, "h1"}));
    CHECK(cache.append({"p2", "pool", -1, {{"y", "z"}}, "h2"}));
    CHECK(cache.append({"p1", "pool", -1, {{"v", 1}}, "h3"}));
    CHECK(cache.append({"p1", "pool", -1, {{"v", 2}}, "h4"}));
    CHECK(cache.latest("p1", "pool")->content_hash == "h4");
    CHECK(cache.problems_with("pool") == std::vector<std::string>{"p2", "p1"});
  }
  RunCache reloaded(path);
  CHECK(reloaded.size() == 4);
  CHECK(reloaded.contains("h2"));
  CHECK(reloaded.find("h1")->payload["x"] == 1);
  CHECK(reloaded.latest("p1", "generate", 0)->content_hash == "h1");
  CHECK_FALSE(reloaded.latest("p1", "generate", 1).has_value());

  const CacheRecord r = RunCache::deserialize(RunCache::serialize({"p", "judge", 3, {{"s", 0.5}}, "hh"}));
  CHECK(r.stage == "judge");
  CHECK(r.candidate_id == 3);
  CHECK_THROWS_AS(RunCache::deserialize("{\"problem_id\": 1}"), Error);

  std::ofstream(path, std::ios::app) << "not json\n";
  CHECK_THROWS_AS(RunCache{path}, Error);
}
