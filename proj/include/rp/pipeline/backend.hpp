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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace rp::pipeline {

/// Connection and decoding settings for an OpenAI-compatible
/// chat-completions endpoint.
struct BackendConfig {
  // Everything before /chat/completions, e.g. https://api.openai.com/v1.
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o-mini";
  // Falls back to $PORTFOLIO_API_KEY when empty.
  std::string api_key;
  double temperature = 1.0;
  std::optional<int> max_tokens;
  // Merged into every request body (e.g. reasoning or verbosity options).
  nlohmann::json extra_body = nlohmann::json::object();
  int max_attempts = 4;
  double initial_backoff_s = 0.5;
  double max_backoff_s = 8.0;
  double request_timeout_s = 120.0;
  // Requests in flight at once.
  std::size_t parallelism = 4;
};

struct ChatRequest {
  std::string system;
  std::string user;
  bool want_logprobs = false;
  std::optional<std::uint64_t> seed;
  // Sent as X-Portfolio-Stage; informational for real servers, routing for
  // the bundled mock.
  std::string stage;
};

struct ChatReply {
  std::string content;
  std::optional<std::vector<double>> token_logprobs;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Thread-safe.
  virtual ChatReply complete(const ChatRequest& request) = 0;
  virtual std::size_t parallelism() const { return 1; }
};

/// Builds the JSON request body for a chat completion.
nlohmann::json build_request_body(const BackendConfig& config, const ChatRequest& request);

/// Extracts content and per-token log-probabilities from a response body.
/// Throws MissingLogprobs when they were requested but are absent.
ChatReply parse_response_body(const nlohmann::json& body, bool want_logprobs);

class OpenAiBackend : public ChatBackend {
 public:
  explicit OpenAiBackend(BackendConfig config);

  ChatReply complete(const ChatRequest& request) override;
  std::size_t parallelism() const override { return config_.parallelism; }

  // HTTP attempts made so far, including retries.
  std::size_t attempts() const { return attempts_.load(); }
  const BackendConfig& config() const { return config_; }

 private:
  BackendConfig config_;
  std::string origin_;       // scheme://host[:port]
  std::string path_prefix_;  // e.g. /v1
  std::atomic<std::size_t> attempts_{0};
};

}  // namespace rp::pipeline
