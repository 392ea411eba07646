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

#include "rp/pipeline/dataset.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "rp/core/error.hpp"
#include "rp/core/numfmt.hpp"

namespace rp::pipeline {

using json = nlohmann::json;

std::string ProblemInstance::ground_truth() const {
  std::string out;
  if (ground_truth_objective) out = "Optimal objective value: " + format_double(*ground_truth_objective);
  if (ground_truth_text) {
    if (!out.empty()) out += "\n";
    out += *ground_truth_text;
  }
  return out;
}

std::vector<ProblemInstance> parse_dataset(std::istream& in, const std::string& source) {
  std::vector<ProblemInstance> problems;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);

    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kSchemaViolation, where + ": not valid JSON (" + e.what() + ")");
    }
    if (!record.is_object()) throw Error(ErrorCode::kSchemaViolation, where + ": record is not an object");
    if (!record.contains("id") || !record["id"].is_string() || record["id"].get<std::string>().empty()) {
      throw Error(ErrorCode::kSchemaViolation, where + ": record has no string 'id'");
    }
    ProblemInstance p;
    p.id = record["id"].get<std::string>();
    const std::string name = "record '" + p.id + "' (" + where + ")";
    if (!seen.insert(p.id).second) throw Error(ErrorCode::kSchemaViolation, name + ": duplicate id");

    if (!record.contains("description") || !record["description"].is_string() ||
        record["description"].get<std::string>().find_first_not_of(" \t\r\n") == std::string::npos) {
      throw Error(ErrorCode::kSchemaViolation, name + ": missing or empty 'description'");
    }
    p.description = record["description"].get<std::string>();

    if (auto it = record.find("ground_truth_objective"); it != record.end() && !it->is_null()) {
      if (!it->is_number()) throw Error(ErrorCode::kSchemaViolation, name + ": 'ground_truth_objective' is not a number");
      p.ground_truth_objective = it->get<double>();
    }
    if (auto it = record.find("ground_truth_text"); it != record.end() && !it->is_null()) {
      if (!it->is_string()) throw Error(ErrorCode::kSchemaViolation, name + ": 'ground_truth_text' is not a string");
      p.ground_truth_text = it->get<std::string>();
    }
    problems.push_back(std::move(p));
  }
  if (problems.empty()) throw Error(ErrorCode::kSchemaViolation, source + ": dataset has no records");
  return problems;
}

std::vector<ProblemInstance> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open dataset " + path.string());
  return parse_dataset(in, path.string());
}

}  // namespace rp::pipeline
