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
#include <map>
#include <string>
#include <string_view>

namespace rp::pipeline {

struct PromptTemplate {
  std::string system;
  std::string user;
};

/// Generator, evaluator and judge prompts. Placeholders: {description},
/// {model_text}, {execution_output}, {ground_truth}.
struct PromptSet {
  PromptTemplate generator;
  PromptTemplate evaluator;
  PromptTemplate judge;

  static PromptSet defaults();
  // Reads generator.txt, evaluator.txt and judge.txt from dir.
  static PromptSet load(const std::filesystem::path& dir);
};

// Text file with a "[system]" line followed by the system prompt and a "[user]"
// line followed by the user prompt.
PromptTemplate parse_template(std::string_view text);
std::string serialize_template(const PromptTemplate& tmpl);

/// Single-pass substitution of the known placeholders; values are never
/// re-expanded and other braces are left alone.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace rp::pipeline
