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

#include "rp/pipeline/mock_server.hpp"

#include <httplib.h>

#include <fstream>

#include "rp/core/error.hpp"

namespace rp::pipeline {

using json = nlohmann::json;

namespace {

std::vector<json> score_list(const json& entry, const char* key) {
  std::vector<json> out;
  if (!entry.contains(key)) return out;
  for (const json& v : entry.at(key)) {
    if (!v.is_number_integer() && !v.is_string()) {
      throw Error(ErrorCode::kSchemaViolation, std::string("mock fixture ") + key + " entries must be integers or strings");
    }
    out.push_back(v);
  }
  return out;
}

std::string user_message(const json& request) {
  std::string out;
  for (const json& m : request.value("messages", json::array())) {
    if (m.value("role", "") == "user") out += m.value("content", "");
  }
  return out;
}

// Splits text into n contiguous chunks of near-equal length.
std::vector<std::string> split_tokens(const std::string& text, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t begin = text.size() * i / n;
    const std::size_t end = text.size() * (i + 1) / n;
    out.push_back(text.substr(begin, end - begin));
  }
  return out;
}

json error_body(const std::string& message) { return json{{"error", {{"message", message}, {"type", "mock"}}}}; }

}  // namespace

MockFixtures MockFixtures::parse(const json& doc) {
  MockFixtures f;
  try {
    f.fail_first = doc.value("fail_first", std::size_t{0});
    for (const json& p : doc.at("problems")) {
      Problem problem;
      problem.id = p.at("id").get<std::string>();
      problem.match = p.value("match", "");
      for (const json& c : p.at("candidates")) {
        Candidate cand;
        cand.text = c.at("text").get<std::string>();
        if (c.contains("logprobs") && !c.at("logprobs").is_null()) {
          cand.logprobs = c.at("logprobs").get<std::vector<double>>();
        } else if (!c.contains("logprobs")) {
          cand.logprobs = std::vector<double>{};
        }
        cand.evaluator_scores = score_list(c, "evaluator_scores");
        cand.judge_scores = score_list(c, "judge_scores");
        problem.candidates.push_back(std::move(cand));
      }
      if (problem.candidates.empty()) {
        throw Error(ErrorCode::kSchemaViolation, "mock fixture problem " + problem.id + " has no candidates");
      }
      f.problems.push_back(std::move(problem));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("bad mock fixtures: ") + e.what());
  }
  return f;
}

MockFixtures MockFixtures::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open mock fixtures " + path.string());
  try {
    return parse(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kSchemaViolation, path.string() + ": " + e.what());
  }
}

struct MockServer::Impl {
  httplib::Server server;
};

MockServer::MockServer(MockFixtures fixtures) : fixtures_(std::move(fixtures)), impl_(std::make_unique<Impl>()) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    int status = 200;
    std::string body;
    json request;
    try {
      request = json::parse(req.body);
    } catch (const json::parse_error&) {
      ++requests_;
      res.status = 400;
      res.set_content(error_body("request body is not JSON").dump(), "application/json");
      return;
    }
    body = handle(request, req.get_header_value("X-Portfolio-Stage"), status);
    res.status = status;
    res.set_content(body, "application/json");
  };
  impl_->server.set_tcp_nodelay(true);
  impl_->server.Post("/v1/chat/completions", handler);
  impl_->server.Post("/chat/completions", handler);
}

MockServer::~MockServer() { stop(); }

std::string MockServer::handle(const json& request, const std::string& stage_header, int& status) {
  const std::size_t index = requests_++;
  if (index < fixtures_.fail_first) {
    status = 503;
    return error_body("mock server warming up").dump();
  }
  const std::string user = user_message(request);
  const MockFixtures::Problem* problem = nullptr;
  for (const auto& p : fixtures_.problems) {
    if (!p.match.empty() && user.find(p.match) != std::string::npos) {
      problem = &p;
      break;
    }
  }
  if (problem == nullptr) {
    status = 400;
    return error_body("no fixture problem matches the prompt").dump();
  }
  std::string stage = stage_header;
  if (stage.empty()) stage = request.value("logprobs", false) ? "generate" : "evaluate";
  const std::uint64_t seed = request.contains("seed") ? request.at("seed").get<std::uint64_t>() : 0;

  json choice{{"index", 0}, {"finish_reason", "stop"}};
  if (stage == "generate") {
    const auto& cand = problem->candidates[seed % problem->candidates.size()];
    choice["message"] = {{"role", "assistant"}, {"content", cand.text}};
    if (cand.logprobs && request.value("logprobs", false)) {
      json tokens = json::array();
      const auto pieces = split_tokens(cand.text, cand.logprobs->size());
      for (std::size_t i = 0; i < pieces.size(); ++i) {
        tokens.push_back({{"token", pieces[i]}, {"logprob", (*cand.logprobs)[i]}, {"top_logprobs", json::array()}});
      }
      choice["logprobs"] = {{"content", std::move(tokens)}};
    } else {
      choice["logprobs"] = nullptr;
    }
  } else if (stage == "evaluate" || stage == "judge") {
    const MockFixtures::Candidate* best = nullptr;
    for (const auto& c : problem->candidates) {
      if (user.find(c.text) != std::string::npos && (best == nullptr || c.text.size() > best->text.size())) best = &c;
    }
    if (best == nullptr) {
      status = 400;
      return error_body("prompt quotes no known candidate").dump();
    }
    const auto& scores = stage == "judge" ? best->judge_scores : best->evaluator_scores;
    if (scores.empty()) {
      status = 400;
      return error_body("fixture candidate has no " + stage + " scores").dump();
    }
    const json& v = scores[seed % scores.size()];
    const std::string content = v.is_string() ? v.get<std::string>() : "Score: " + std::to_string(v.get<long long>());
    choice["message"] = {{"role", "assistant"}, {"content", content}};
    choice["logprobs"] = nullptr;
  } else {
    status = 400;
    return error_body("unknown stage " + stage).dump();
  }
  status = 200;
  return json{{"id", "mock-" + std::to_string(index)},
              {"object", "chat.completion"},
              {"model", request.value("model", "mock")},
              {"choices", json::array({std::move(choice)})}}
      .dump();
}

int MockServer::start(int port) {
  if (thread_.joinable()) return port_;
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
  } else {
    port_ = impl_->server.bind_to_port("127.0.0.1", port) ? port : -1;
  }
  if (port_ <= 0) throw Error(ErrorCode::kIo, "mock server could not bind a port");
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void MockServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

void MockServer::wait() {
  if (thread_.joinable()) thread_.join();
}

std::string MockServer::base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

}  // namespace rp::pipeline
