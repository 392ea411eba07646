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

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace rp::pipeline {

/// One line of the run cache.
///
///   problem_id    dataset id of the problem
///   stage         generate | pool | execute | evaluate | rank_llm |
///                 rank_genprob | judge
///   candidate_id  sample index (generate), distinct-candidate id (execute,
///                 evaluate, judge) or -1 for per-problem records
///   payload       stage-specific object
///   content_hash  SHA-256 of every input that determines the payload
struct CacheRecord {
  std::string problem_id;
  std::string stage;
  std::int64_t candidate_id = -1;
  nlohmann::json payload;
  std::string content_hash;
};

/// SHA-256 hex digest of the parts joined with a unit separator.
std::string content_hash(const std::vector<std::string>& parts);

/// Append-only line-delimited JSON store. A record whose content_hash is
/// already present is never written again, which makes every stage resumable.
/// Appends are serialized; lookups may run concurrently with them.
class RunCache {
 public:
  // Loads path if it exists; the file is created on first append.
  explicit RunCache(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }
  std::size_t size() const;

  bool contains(const std::string& hash) const;
  std::optional<CacheRecord> find(const std::string& hash) const;
  // Most recently appended record for (problem, stage, candidate).
  std::optional<CacheRecord> latest(std::string_view problem_id, std::string_view stage,
                                    std::int64_t candidate_id = -1) const;
  // Problem ids with at least one record of `stage`, in first-appearance order.
  std::vector<std::string> problems_with(std::string_view stage) const;

  // Returns false when the hash was already cached.
  bool append(const CacheRecord& record);

  static std::string serialize(const CacheRecord& record);
  static CacheRecord deserialize(std::string_view line);

 private:
  static std::string slot_key(std::string_view problem_id, std::string_view stage, std::int64_t candidate_id);

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::vector<CacheRecord> records_;
  std::unordered_map<std::string, std::size_t> by_hash_;
  std::unordered_map<std::string, std::size_t> latest_;
};

}  // namespace rp::pipeline
