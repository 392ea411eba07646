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
#include <string>
#include <string_view>
#include <vector>

#include "rp/pipeline/candidate.hpp"

namespace rp::pipeline {

struct RunnerConfig {
  // Interpreter command; the script path is appended as the last argument.
  std::vector<std::string> interpreter{"python3"};
  // Parent of the per-run scratch directories; empty means the system temp dir.
  std::filesystem::path work_root;
  double timeout_s = 30.0;
  // Bytes kept from each of stdout and stderr.
  std::size_t output_cap = 64 * 1024;
  // Environment variables passed through to the child; everything else is dropped.
  std::vector<std::string> env_allowlist{"PATH", "HOME", "LANG", "LC_ALL", "TMPDIR", "PYTHONPATH",
                                         "VIRTUAL_ENV"};
  std::string script_name = "candidate.py";
};

/// Absolute path of an executable, searching $PATH for bare names. Throws
/// RunnerMisconfigured when nothing executable is found.
std::string resolve_executable(const std::string& name);

/// Runs code in a fresh scratch directory. Program failure, crashes and
/// timeouts are reported in the result; only a missing interpreter or an
/// unusable work_root throws.
ExecutionResult execute_code(std::string_view code, const RunnerConfig& runner);

/// Requires candidate.is_valid.
ExecutionResult execute_candidate(const GeneratedCandidate& candidate, const RunnerConfig& runner);

/// Rendering of an execution result for the evaluator and judge prompts.
std::string describe_execution(const ExecutionResult& result);

}  // namespace rp::pipeline
