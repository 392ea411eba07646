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
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "rp/pipeline/backend.hpp"

// Replies from a callback and records every request.
class ScriptedBackend : public rp::pipeline::ChatBackend {
 public:
  using Script = std::function<rp::pipeline::ChatReply(const rp::pipeline::ChatRequest&)>;

  explicit ScriptedBackend(Script script) : script_(std::move(script)) {}

  rp::pipeline::ChatReply complete(const rp::pipeline::ChatRequest& request) override {
    {
      std::lock_guard lock(mutex_);
      requests_.push_back(request);
    }
    return script_(request);
  }

  std::size_t calls() const {
    std::lock_guard lock(mutex_);
    return requests_.size();
  }
  std::vector<rp::pipeline::ChatRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  Script script_;
  mutable std::mutex mutex_;
  std::vector<rp::pipeline::ChatRequest> requests_;
};

inline rp::pipeline::ChatReply text_reply(std::string content) { return {std::move(content), std::nullopt}; }
