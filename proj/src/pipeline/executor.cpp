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

#include "rp/pipeline/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "rp/core/error.hpp"
#include "rp/core/numfmt.hpp"

extern char** environ;

namespace rp::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr double kKillGraceS = 1.0;

void replace_all(std::string& text, const std::string& from, const std::string& to) {
  for (std::size_t pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
}

bool is_executable(const std::string& path) {
  struct stat st {};
  return ::stat(path.c_str(), &st) == 0 && S_ISREG(st.st_mode) && ::access(path.c_str(), X_OK) == 0;
}

class ScratchDir {
 public:
  explicit ScratchDir(const fs::path& root) {
    std::error_code ec;
    const fs::path base = root.empty() ? fs::temp_directory_path(ec) : root;
    if (ec || !fs::is_directory(base)) {
      throw Error(ErrorCode::kRunnerMisconfigured, "work root " + base.string() + " is not a directory");
    }
    std::string tmpl = (base / "rp-run-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) {
      throw Error(ErrorCode::kRunnerMisconfigured, "cannot create scratch directory under " + base.string() +
                                                       ": " + std::strerror(errno));
    }
    path_ = tmpl;
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

struct Pipe {
  int read_end = -1;
  int write_end = -1;

  Pipe() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) {
      throw Error(ErrorCode::kRunnerMisconfigured, std::string("pipe: ") + std::strerror(errno));
    }
    read_end = fds[0];
    write_end = fds[1];
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  void close_read() {
    if (read_end >= 0) ::close(read_end);
    read_end = -1;
  }
  void close_write() {
    if (write_end >= 0) ::close(write_end);
    write_end = -1;
  }
};

void append_capped(std::string& sink, const char* data, std::size_t n, std::size_t cap, bool& truncated) {
  const std::size_t room = sink.size() < cap ? cap - sink.size() : 0;
  if (n > room) truncated = true;
  sink.append(data, std::min(n, room));
}

}  // namespace

std::string resolve_executable(const std::string& name) {
  if (name.empty()) throw Error(ErrorCode::kRunnerMisconfigured, "empty interpreter command");
  if (name.find('/') != std::string::npos) {
    if (is_executable(name)) return fs::absolute(name).string();
    throw Error(ErrorCode::kRunnerMisconfigured, "interpreter " + name + " is not executable");
  }
  const char* path_env = std::getenv("PATH");
  std::stringstream dirs(path_env ? path_env : "/usr/local/bin:/usr/bin:/bin");
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (dir.empty()) continue;
    const std::string candidate = dir + "/" + name;
    if (is_executable(candidate)) return candidate;
  }
  throw Error(ErrorCode::kRunnerMisconfigured, "interpreter '" + name + "' not found on PATH");
}

ExecutionResult execute_code(std::string_view code, const RunnerConfig& runner) {
  if (runner.interpreter.empty()) {
    throw Error(ErrorCode::kRunnerMisconfigured, "no interpreter command configured");
  }
  const std::string program = resolve_executable(runner.interpreter.front());
  ScratchDir scratch(runner.work_root);
  const fs::path script = scratch.path() / runner.script_name;
  {
    std::ofstream out(script, std::ios::binary);
    out << code;
    if (!out) throw Error(ErrorCode::kRunnerMisconfigured, "cannot write " + script.string());
  }

  // Everything the child touches is prepared before fork.
  std::vector<std::string> args(runner.interpreter.begin(), runner.interpreter.end());
  // Relative to the scratch directory so outputs do not depend on its name.
  args.push_back(runner.script_name);
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  std::vector<std::string> env;
  for (const std::string& name : runner.env_allowlist) {
    if (const char* value = std::getenv(name.c_str())) env.push_back(name + "=" + value);
  }
  std::vector<char*> envp;
  for (std::string& e : env) envp.push_back(e.data());
  envp.push_back(nullptr);
  const std::string workdir = scratch.path().string();

  Pipe out_pipe;
  Pipe err_pipe;
  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::kRunnerMisconfigured, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    if (::chdir(workdir.c_str()) != 0) ::_exit(127);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::dup2(out_pipe.write_end, STDOUT_FILENO);
    ::dup2(err_pipe.write_end, STDERR_FILENO);
    ::execve(program.c_str(), argv.data(), envp.data());
    static const char kMsg[] = "exec failed\n";
    [[maybe_unused]] auto ignored = ::write(STDERR_FILENO, kMsg, sizeof(kMsg) - 1);
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  out_pipe.close_write();
  err_pipe.close_write();

  ExecutionResult result;
  const auto deadline = start + std::chrono::duration<double>(runner.timeout_s);
  std::optional<std::chrono::steady_clock::time_point> killed_at;
  std::array<char, 8192> buffer{};
  while (out_pipe.read_end >= 0 || err_pipe.read_end >= 0) {
    const auto now = std::chrono::steady_clock::now();
    if (!killed_at && now >= deadline) {
      ::kill(-pid, SIGKILL);
      result.timed_out = true;
      killed_at = now;
    }
    if (killed_at && now - *killed_at > std::chrono::duration<double>(kKillGraceS)) break;

    std::array<pollfd, 2> fds{pollfd{out_pipe.read_end, POLLIN, 0}, pollfd{err_pipe.read_end, POLLIN, 0}};
    const auto limit = killed_at ? *killed_at + std::chrono::duration<double>(kKillGraceS) : deadline;
    const auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(limit - now).count();
    const int ready = ::poll(fds.data(), fds.size(), static_cast<int>(std::clamp<long long>(wait_ms, 1, 100)));
    if (ready < 0 && errno != EINTR) break;
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (fds[i].fd < 0 || (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) == 0) continue;
      Pipe& pipe = i == 0 ? out_pipe : err_pipe;
      const ssize_t n = ::read(pipe.read_end, buffer.data(), buffer.size());
      if (n > 0) {
        append_capped(i == 0 ? result.stdout_text : result.stderr_text, buffer.data(),
                      static_cast<std::size_t>(n), runner.output_cap, result.truncated);
      } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
        pipe.close_read();
      }
    }
  }
  out_pipe.close_read();
  err_pipe.close_read();

  int status = 0;
  pid_t waited = 0;
  while (true) {
    waited = ::waitpid(pid, &status, killed_at ? 0 : WNOHANG);
    if (waited == pid || (waited < 0 && errno != EINTR)) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      result.timed_out = true;
      killed_at = std::chrono::steady_clock::now();
      continue;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  // Descendants that detached from the pipes still belong to the group.
  ::kill(-pid, SIGKILL);
  result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (WIFEXITED(status)) {
    result.exit_status = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_status = 128 + WTERMSIG(status);
  } else {
    result.exit_status = -1;
  }
  if (result.timed_out && result.exit_status == 0) result.exit_status = 128 + SIGKILL;
  // Interpreters echo the scratch path in tracebacks; mask it so identical
  // code yields identical output.
  std::vector<std::string> scratch_names{workdir};
  std::error_code ec;
  const fs::path canonical = fs::canonical(scratch.path(), ec);
  if (!ec && canonical.string() != workdir) scratch_names.push_back(canonical.string());
  for (const std::string& name : scratch_names) {
    replace_all(result.stdout_text, name, ".");
    replace_all(result.stderr_text, name, ".");
  }
  return result;
}

ExecutionResult execute_candidate(const GeneratedCandidate& candidate, const RunnerConfig& runner) {
  if (!candidate.is_valid) {
    throw Error(ErrorCode::kInvalidArgument,
                "candidate " + std::to_string(candidate.sample_index) + " has no runnable code block");
  }
  return execute_code(candidate.code, runner);
}

std::string describe_execution(const ExecutionResult& result) {
  std::string out;
  if (result.timed_out) {
    out += "The program was stopped after exceeding the time limit.\n";
  }
  out += "Exit status: " + std::to_string(result.exit_status) + "\n";
  out += "--- stdout ---\n" + result.stdout_text;
  if (!result.stdout_text.empty() && result.stdout_text.back() != '\n') out += "\n";
  out += "--- stderr ---\n" + result.stderr_text;
  if (!result.stderr_text.empty() && result.stderr_text.back() != '\n') out += "\n";
  if (result.truncated) out += "(output truncated)\n";
  return out;
}

}  // namespace rp::pipeline
