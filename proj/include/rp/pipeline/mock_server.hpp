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
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace rp::pipeline {

/// Canned replies for the bundled OpenAI-compatible test server.
///
///   {"fail_first": 0,
///    "problems": [{"id": "...", "match": "<substring of the description>",
///                  "candidates": [{"text": "...", "logprobs": [...],
///                                  "evaluator_scores": [80, "n/a", ...],
///                                  "judge_scores": [...]}]}]}
///
/// A null "logprobs" omits them from generate replies. A string score is
/// returned verbatim instead of "Score: N".
struct MockFixtures {
  struct Candidate {
    std::string text;
    std::optional<std::vector<double>> logprobs;
    std::vector<nlohmann::json> evaluator_scores;
    std::vector<nlohmann::json> judge_scores;
  };
  struct Problem {
    std::string id;
    std::string match;
    std::vector<Candidate> candidates;
  };

  std::vector<Problem> problems;
  // The first N requests get HTTP 503.
  std::size_t fail_first = 0;

  static MockFixtures parse(const nlohmann::json& doc);
  static MockFixtures load(const std::filesystem::path& path);
};

/// Answers POST {base}/chat/completions from fixtures. Routing uses the
/// X-Portfolio-Stage header (generate / evaluate / judge), the problem whose
/// "match" occurs in the user message, and the request seed:
/// generate returns candidate[seed % n]; scoring finds the longest candidate
/// text quoted in the prompt and returns scores[seed % len].
class MockServer {
 public:
  explicit MockServer(MockFixtures fixtures);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Binds 127.0.0.1:port (0 picks a free port) and serves on a background
  // thread. Returns the bound port.
  int start(int port = 0);
  void stop();
  // Blocks until stop() is called from another thread or a signal handler.
  void wait();

  int port() const { return port_; }
  std::string base_url() const;
  std::size_t request_count() const { return requests_.load(); }

  // Response body for a request body, exposed for tests. status receives the
  // HTTP status.
  std::string handle(const nlohmann::json& request, const std::string& stage, int& status);

 private:
  struct Impl;
  MockFixtures fixtures_;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> requests_{0};
};

}  // namespace rp::pipeline
