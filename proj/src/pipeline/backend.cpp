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

#include "rp/pipeline/backend.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "rp/core/error.hpp"

namespace rp::pipeline {

using json = nlohmann::json;

namespace {

bool retryable_status(int status) {
  return status == 408 || status == 409 || status == 429 || status >= 500;
}

}  // namespace

json build_request_body(const BackendConfig& config, const ChatRequest& request) {
  json body = {
      {"model", config.model},
      {"messages", json::array({{{"role", "system"}, {"content", request.system}},
                                {{"role", "user"}, {"content", request.user}}})},
      {"temperature", config.temperature},
      {"n", 1},
  };
  if (request.want_logprobs) body["logprobs"] = true;
  if (request.seed) body["seed"] = *request.seed;
  if (config.max_tokens) body["max_tokens"] = *config.max_tokens;
  if (config.extra_body.is_object()) {
    for (const auto& [key, value] : config.extra_body.items()) body[key] = value;
  }
  return body;
}

ChatReply parse_response_body(const json& body, bool want_logprobs) {
  const auto choices = body.find("choices");
  if (choices == body.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorCode::kBackendUnreachable, "backend response has no choices");
  }
  const json& choice = choices->front();
  ChatReply reply;
  if (auto msg = choice.find("message"); msg != choice.end() && msg->is_object()) {
    if (auto content = msg->find("content"); content != msg->end() && content->is_string()) {
      reply.content = content->get<std::string>();
    }
  }
  const auto logprobs = choice.find("logprobs");
  if (logprobs != choice.end() && logprobs->is_object()) {
    if (auto content = logprobs->find("content"); content != logprobs->end() && content->is_array()) {
      std::vector<double> values;
      values.reserve(content->size());
      for (const json& token : *content) {
        if (!token.contains("logprob") || !token["logprob"].is_number()) {
          throw Error(ErrorCode::kMissingLogprobs, "token entry without a numeric logprob");
        }
        values.push_back(token["logprob"].get<double>());
      }
      reply.token_logprobs = std::move(values);
    }
  }
  if (want_logprobs && !reply.token_logprobs) {
    throw Error(ErrorCode::kMissingLogprobs,
                "backend did not return per-token log-probabilities; the generator needs them");
  }
  return reply;
}

OpenAiBackend::OpenAiBackend(BackendConfig config) : config_(std::move(config)) {
  if (config_.api_key.empty()) {
    if (const char* key = std::getenv("PORTFOLIO_API_KEY")) config_.api_key = key;
  }
  std::string url = config_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "base URL needs a scheme: " + config_.base_url);
  }
  const std::size_t path = url.find('/', scheme + 3);
  origin_ = url.substr(0, path);
  path_prefix_ = path == std::string::npos ? "" : url.substr(path);
  if (config_.max_attempts < 1) config_.max_attempts = 1;
  if (config_.parallelism == 0) config_.parallelism = 1;
}

ChatReply OpenAiBackend::complete(const ChatRequest& request) {
  const std::string body = build_request_body(config_, request).dump();
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  if (!request.stage.empty()) headers.emplace("X-Portfolio-Stage", request.stage);

  std::string last_error;
  for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
    if (attempt > 0) {
      const double delay =
          std::min(config_.max_backoff_s, config_.initial_backoff_s * static_cast<double>(1 << (attempt - 1)));
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    ++attempts_;
    httplib::Client client(origin_);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(config_.request_timeout_s));
    client.set_tcp_nodelay(true);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    const auto result = client.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status != 200) {
      last_error = "HTTP " + std::to_string(result->status) + ": " + result->body.substr(0, 300);
      if (retryable_status(result->status)) continue;
      throw Error(ErrorCode::kBackendUnreachable, "backend rejected the request (" + last_error + ")");
    }
    json parsed;
    try {
      parsed = json::parse(result->body);
    } catch (const json::parse_error&) {
      last_error = "response is not JSON";
      continue;
    }
    return parse_response_body(parsed, request.want_logprobs);
  }
  throw Error(ErrorCode::kBackendUnreachable,
              "backend " + config_.base_url + " failed after " + std::to_string(config_.max_attempts) +
                  " attempts (" + last_error + ")");
}

}  // namespace rp::pipeline
