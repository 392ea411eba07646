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

#include <doctest.h>

#include <chrono>
#include <cstdlib>

#include "rp/core/error.hpp"
#include "rp/pipeline/executor.hpp"

using namespace rp;
using namespace rp::pipeline;

TEST_CASE("successful program") {
  RunnerConfig runner;
  const ExecutionResult r = execute_code("print('Optimal objective: 42.0')\n", runner);
  CHECK(r.exit_status == 0);
  CHECK(r.stdout_text.find("Optimal objective: 42.0") != std::string::npos);
  CHECK_FALSE(r.timed_out);
  CHECK(describe_execution(r).find("Optimal objective: 42.0") != std::string::npos);
}

TEST_CASE("broken program is data, not an error") {
  const ExecutionResult r = execute_code("def broken(:\n", RunnerConfig{});
  CHECK(r.exit_status != 0);
  CHECK_FALSE(r.stderr_text.empty());
  CHECK(r.stderr_text.find("/tmp/") == std::string::npos);
}

TEST_CASE("timeout kills the process group") {
  RunnerConfig runner;
  runner.timeout_s = 1.0;
  const auto start = std::chrono::steady_clock::now();
  const ExecutionResult r = execute_code("import subprocess, time\nsubprocess.Popen(['sleep', '60'])\nwhile True:\n    time.sleep(0.01)\n", runner);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(r.timed_out);
  CHECK(r.exit_status != 0);
  CHECK(elapsed < runner.timeout_s + 2.0);
}

TEST_CASE("output is capped") {
  RunnerConfig runner;
  runner.output_cap = 100;
  const ExecutionResult r = execute_code("print('x' * 10000)\n", runner);
  CHECK(r.stdout_text.size() == 100);
  CHECK(r.truncated);
  CHECK(r.exit_status == 0);
}

TEST_CASE("environment is scrubbed to the allow-list") {
  ::setenv("RP_TEST_SECRET", "hunter2", 1);
  const ExecutionResult r =
      execute_code("import os\nprint(os.environ.get('RP_TEST_SECRET', 'absent'))\nprint(os.getcwd())\n", RunnerConfig{});
  CHECK(r.stdout_text.rfind("absent\n", 0) == 0);
}

TEST_CASE("runner misconfiguration") {
  RunnerConfig runner;
  runner.interpreter = {"definitely-not-an-interpreter-xyz"};
  CHECK_THROWS_AS(execute_code("print(1)", runner), Error);
  try {
    execute_code("print(1)", runner);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRunnerMisconfigured);
  }
  runner.interpreter = {};
  CHECK_THROWS_AS(execute_code("print(1)", runner), Error);
  CHECK_THROWS_AS(resolve_executable(""), Error);
  CHECK(resolve_executable("python3").front() == '/');
}

TEST_CASE("invalid candidates are not executed") {
  const GeneratedCandidate c = make_candidate(0, "no code", {});
  CHECK_THROWS_AS(execute_candidate(c, RunnerConfig{}), Error);
  const GeneratedCandidate ok = make_candidate(1, "```python\nprint(7)\n```", {});
  CHECK(execute_candidate(ok, RunnerConfig{}).stdout_text == "7\n");
}

TEST_CASE("execution wall time stays within timeout plus grace") {
  RunnerConfig runner;
  runner.timeout_s = 0.5;
  for (const char* code : {"while True: pass\n", "import time\ntime.sleep(30)\n", "print(1)\n"}) {
    const auto start = std::chrono::steady_clock::now();
    const ExecutionResult r = execute_code(code, runner);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(elapsed < runner.timeout_s + 2.0);
    CHECK(r.wall_time_s <= elapsed);
  }
}
