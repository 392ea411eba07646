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

#include "rp/pipeline/cache.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>

#include "rp/core/error.hpp"

namespace rp::pipeline {

using json = nlohmann::json;

std::string content_hash(const std::vector<std::string>& parts) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 unavailable");
  }
  static constexpr char kSeparator = '\x1f';
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) EVP_DigestUpdate(ctx.get(), &kSeparator, 1);
    EVP_DigestUpdate(ctx.get(), parts[i].data(), parts[i].size());
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xf]);
  }
  return hex;
}

RunCache::RunCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    CacheRecord record;
    try {
      record = deserialize(line);
    } catch (const Error& e) {
      throw Error(ErrorCode::kSchemaViolation,
                  path_.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    const std::size_t index = records_.size();
    by_hash_.emplace(record.content_hash, index);
    latest_[slot_key(record.problem_id, record.stage, record.candidate_id)] = index;
    records_.push_back(std::move(record));
  }
}

std::size_t RunCache::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

bool RunCache::contains(const std::string& hash) const {
  std::lock_guard lock(mutex_);
  return by_hash_.contains(hash);
}

std::optional<CacheRecord> RunCache::find(const std::string& hash) const {
  std::lock_guard lock(mutex_);
  const auto it = by_hash_.find(hash);
  if (it == by_hash_.end()) return std::nullopt;
  return records_[it->second];
}

std::optional<CacheRecord> RunCache::latest(std::string_view problem_id, std::string_view stage,
                                            std::int64_t candidate_id) const {
  std::lock_guard lock(mutex_);
  const auto it = latest_.find(slot_key(problem_id, stage, candidate_id));
  if (it == latest_.end()) return std::nullopt;
  return records_[it->second];
}

std::vector<std::string> RunCache::problems_with(std::string_view stage) const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> ids;
  for (const CacheRecord& r : records_) {
    if (r.stage == stage && std::find(ids.begin(), ids.end(), r.problem_id) == ids.end()) {
      ids.push_back(r.problem_id);
    }
  }
  return ids;
}

bool RunCache::append(const CacheRecord& record) {
  std::lock_guard lock(mutex_);
  if (by_hash_.contains(record.content_hash)) return false;
  if (records_.empty() && path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out << serialize(record) << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "cannot append to cache " + path_.string());
  const std::size_t index = records_.size();
  by_hash_.emplace(record.content_hash, index);
  latest_[slot_key(record.problem_id, record.stage, record.candidate_id)] = index;
  records_.push_back(record);
  return true;
}

std::string RunCache::serialize(const CacheRecord& record) {
  nlohmann::ordered_json line;
  line["problem_id"] = record.problem_id;
  line["stage"] = record.stage;
  line["candidate_id"] = record.candidate_id;
  line["payload"] = record.payload;
  line["content_hash"] = record.content_hash;
  return line.dump(-1, ' ', false, json::error_handler_t::replace);
}

CacheRecord RunCache::deserialize(std::string_view line) {
  json parsed;
  try {
    parsed = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("cache line is not JSON: ") + e.what());
  }
  try {
    CacheRecord record;
    record.problem_id = parsed.at("problem_id").get<std::string>();
    record.stage = parsed.at("stage").get<std::string>();
    record.candidate_id = parsed.at("candidate_id").get<std::int64_t>();
    record.payload = parsed.at("payload");
    record.content_hash = parsed.at("content_hash").get<std::string>();
    return record;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("cache record is malformed: ") + e.what());
  }
}

std::string RunCache::slot_key(std::string_view problem_id, std::string_view stage, std::int64_t candidate_id) {
  std::string key(problem_id);
  key += '\x1f';
  key += stage;
  key += '\x1f';
  key += std::to_string(candidate_id);
  return key;
}

}  // namespace rp::pipeline
