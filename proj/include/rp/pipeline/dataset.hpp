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

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace rp::pipeline {

struct ProblemInstance {
  std::string id;
  std::string description;
  std::optional<double> ground_truth_objective;
  std::optional<std::string> ground_truth_text;

  bool has_ground_truth() const { return ground_truth_objective || ground_truth_text; }
  // Human-readable ground truth for prompts; empty when absent.
  std::string ground_truth() const;
};

/// Reads one JSON object per line:
///   {"id": str, "description": str,
///    "ground_truth_objective": number?, "ground_truth_text": str?}
/// Blank lines are skipped. Throws SchemaViolation naming the offending record.
std::vector<ProblemInstance> load_dataset(const std::filesystem::path& path);
std::vector<ProblemInstance> parse_dataset(std::istream& in, const std::string& source);

}  // namespace rp::pipeline
