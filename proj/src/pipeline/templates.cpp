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

#include "rp/pipeline/templates.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "rp/core/error.hpp"

namespace rp::pipeline {

PromptSet PromptSet::defaults() {
  // Kept identical to templates/*.txt; test_templates checks the two agree.
  PromptSet set;
  set.generator.system = R"PROMPT(You are a helpful assistant with expertise in operations research and mathematical optimization.)PROMPT";
  set.generator.user = R"PROMPT(Below is an operations research question. Build a mathematical model and corresponding Python code that appropriately addresses the question.

First describe the model in natural language: decision variables, objective and constraints. Then give one self-contained Python program in a single ```python code block. The program may use scipy.optimize or PuLP, must solve the model, and must print the optimal objective value on a line of the form "Optimal objective: <value>".

# Question:
{description}

# Response:)PROMPT";
  set.evaluator.system = R"PROMPT(You are an expert in operations research who reviews optimization models written by others.)PROMPT";
  set.evaluator.user = R"PROMPT(Below is an operations research question, a candidate optimization model for it (a natural-language formulation followed by Python code), and the output produced by running that code.

Assess how faithfully the model captures the question: decision variables, objective, constraints and data. Use the execution output as evidence of whether the code runs and what it computes.

# Question:
{description}

# Candidate model:
{model_text}

# Execution output:
{execution_output}

Reply with a single integer score from 1 (completely wrong) to 100 (fully correct) and nothing else.)PROMPT";
  set.judge.system = R"PROMPT(You are an expert in operations research grading optimization models against a reference solution.)PROMPT";
  set.judge.user = R"PROMPT(Below is an operations research question, its ground truth solution, a candidate optimization model for it (a natural-language formulation followed by Python code), and the output produced by running that code.

Grade how well the candidate model captures the question. Compare its formulation and its computed result with the ground truth solution.

# Question:
{description}

# Ground truth solution:
{ground_truth}

# Candidate model:
{model_text}

# Execution output:
{execution_output}

Reply with a single integer score from 1 (completely wrong) to 100 (fully correct) and nothing else.)PROMPT";
  return set;
}

PromptSet PromptSet::load(const std::filesystem::path& dir) {
  auto read = [&](const char* name) {
    const std::filesystem::path path = dir / name;
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot read prompt template " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
      return parse_template(buffer.str());
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ": " + e.what());
    }
  };
  return PromptSet{read("generator.txt"), read("evaluator.txt"), read("judge.txt")};
}

PromptTemplate parse_template(std::string_view text) {
  PromptTemplate tmpl;
  std::string* section = nullptr;
  bool saw_system = false;
  bool saw_user = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line == "[system]") {
      section = &tmpl.system;
      saw_system = true;
    } else if (line == "[user]") {
      section = &tmpl.user;
      saw_user = true;
    } else if (section != nullptr) {
      section->append(line);
      section->push_back('\n');
    } else if (!line.empty()) {
      throw Error(ErrorCode::kSchemaViolation, "template text before the [system] section");
    }
    pos = end + 1;
  }
  if (!saw_system || !saw_user) {
    throw Error(ErrorCode::kSchemaViolation, "template needs [system] and [user] sections");
  }
  for (std::string* s : {&tmpl.system, &tmpl.user}) {
    while (!s->empty() && s->back() == '\n') s->pop_back();
  }
  return tmpl;
}

std::string serialize_template(const PromptTemplate& tmpl) {
  return "[system]\n" + tmpl.system + "\n[user]\n" + tmpl.user + "\n";
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string_view::npos) break;
    const std::string name(tmpl.substr(open + 1, close - open - 1));
    out.append(tmpl.substr(pos, open - pos));
    if (auto it = values.find(name); it != values.end()) {
      out += it->second;
      pos = close + 1;
    } else {
      out.push_back('{');
      pos = open + 1;
    }
  }
  out.append(tmpl.substr(pos));
  return out;
}

}  // namespace rp::pipeline
