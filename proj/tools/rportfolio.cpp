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

// rportfolio: command-line front end over the rportfolio C API.

#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <memory>
#include <sstream>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rp/rp.h"

#ifndef RP_DEFAULT_FIXTURES
#define RP_DEFAULT_FIXTURES "data/mock_fixtures.json"
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Failure {
  int exit_code;
  std::string message;
};

void check(rp_status status, const std::string& context) {
  if (status != RP_OK) {
    const int code = status == RP_ERR_INVALID_ARGUMENT ? kExitUsage : kExitRuntime;
    throw Failure{code, context + ": " + rp_status_string(status) + ": " + rp_last_error()};
  }
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  rp_string_free(s);
  return out;
}

struct SimulateArgs {
  std::vector<std::size_t> k_values;
  std::vector<std::string> generators{"aligned", "weakly_aligned", "uniform", "misaligned"};
  std::vector<double> epsilons{0.0, 0.3, 0.5, 0.7, 1.0};
  std::size_t seeds = 40;
  double alpha_step = 0.02;
  std::vector<double> alphas;
  std::string out;
  std::string aggregate_out;
  std::size_t jobs = 0;
};

struct PipelineArgs {
  std::string dataset;
  std::string cache;
  std::vector<std::string> problems;
  // Backend and stage settings.
  std::string base_url;
  std::string model;
  std::string judge_base_url;
  std::string judge_model;
  std::optional<double> temperature;
  std::optional<double> judge_temperature;
  std::optional<std::size_t> max_tokens;
  std::string extra_body;
  std::optional<std::size_t> parallelism;
  std::optional<std::size_t> max_attempts;
  std::optional<double> backoff;
  std::optional<double> request_timeout;
  std::string templates;
  bool mock = false;
  std::string mock_fixtures = RP_DEFAULT_FIXTURES;
  std::uint64_t seed = 0;
  std::optional<std::size_t> jobs;
  std::string interpreter;
  std::optional<double> timeout;
  std::optional<std::size_t> output_cap;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> judge_samples;
  std::string score_pattern;
  std::size_t n = 50;
  std::string mode;
  // portfolio
  std::optional<double> alpha;
  std::optional<std::size_t> size;
  std::string problem;
  std::string out;
  // report
  std::vector<std::size_t> sizes{2, 4, 6, 8};
  std::size_t baseline_draws = 30;
};

void add_store_options(CLI::App* cmd, PipelineArgs& a, bool dataset_required) {
  auto* dataset = cmd->add_option("--dataset", a.dataset, "Problems, one JSON object per line")
                      ->envname("PORTFOLIO_DATASET");
  if (dataset_required) dataset->required();
  cmd->add_option("--cache", a.cache, "Run cache (JSONL, append-only)")->required()->envname("PORTFOLIO_CACHE");
  cmd->add_option("--problems", a.problems, "Restrict to these problem ids")->delimiter(',');
}

void add_backend_options(CLI::App* cmd, PipelineArgs& a) {
  cmd->add_option("--base-url", a.base_url, "OpenAI-compatible base URL, e.g. https://api.openai.com/v1")
      ->envname("PORTFOLIO_BASE_URL");
  cmd->add_option("--model", a.model, "Generator / evaluator model")->envname("PORTFOLIO_MODEL");
  cmd->add_option("--temperature", a.temperature, "Sampling temperature (default 1.0)");
  cmd->add_option("--max-tokens", a.max_tokens, "Completion token limit");
  cmd->add_option("--extra-body", a.extra_body, "JSON object merged into every request");
  cmd->add_option("--parallelism", a.parallelism, "Backend requests in flight (default 4)");
  cmd->add_option("--max-attempts", a.max_attempts, "Attempts per request (default 4)");
  cmd->add_option("--backoff", a.backoff, "Initial retry backoff in seconds (default 0.5)");
  cmd->add_option("--request-timeout", a.request_timeout, "Per-request timeout in seconds");
  cmd->add_option("--templates", a.templates, "Directory with generator.txt, evaluator.txt, judge.txt")
      ->check(CLI::ExistingDirectory);
  cmd->add_flag("--mock", a.mock, "Serve the bundled mock backend in-process and use it");
  cmd->add_option("--mock-fixtures", a.mock_fixtures, "Fixtures for --mock")
      ->envname("PORTFOLIO_MOCK_FIXTURES")
      ->capture_default_str();
  cmd->add_option("--seed", a.seed, "Seed for tie-breaking")->envname("PORTFOLIO_SEED")->capture_default_str();
  cmd->add_option("--jobs", a.jobs, "Concurrent candidate executions (default 4)");
  cmd->add_option("--interpreter", a.interpreter, "Interpreter command for candidate code (default python3)");
  cmd->add_option("--timeout", a.timeout, "Execution timeout in seconds (default 30)");
  cmd->add_option("--output-cap", a.output_cap, "Bytes kept per output stream");
  cmd->add_option("--samples", a.samples, "Evaluator samples per candidate (default 4)");
  cmd->add_option("--score-pattern", a.score_pattern, "Regex whose first group is the 1..100 score");
}

void add_judge_options(CLI::App* cmd, PipelineArgs& a) {
  cmd->add_option("--judge-model", a.judge_model, "Judge model (default: --model)")->envname("PORTFOLIO_JUDGE_MODEL");
  cmd->add_option("--judge-base-url", a.judge_base_url, "Judge base URL (default: --base-url)")
      ->envname("PORTFOLIO_JUDGE_BASE_URL");
  cmd->add_option("--judge-temperature", a.judge_temperature, "Judge temperature (default: --temperature)");
  cmd->add_option("--judge-samples", a.judge_samples, "Judge samples per candidate (default 4)");
}

template <class T>
std::string to_text(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
  }
}

class PipelineHandle {
 public:
  PipelineHandle(const PipelineArgs& a) {
    check(rp_pipeline_create(a.dataset.empty() ? nullptr : a.dataset.c_str(), a.cache.c_str(), &handle_),
          "opening pipeline");
    rp_pipeline_set_logger(
        handle_, [](const char* line, void*) { std::cout << line << std::endl; }, nullptr);
  }
  ~PipelineHandle() {
    rp_pipeline_free(handle_);
    if (mock_) rp_mock_server_stop(mock_);
  }
  PipelineHandle(const PipelineHandle&) = delete;
  PipelineHandle& operator=(const PipelineHandle&) = delete;

  void set(const char* key, const std::string& value) {
    check(rp_pipeline_set(handle_, key, value.c_str()), std::string("setting ") + key);
  }
  template <class T>
  void set_if(const char* key, const std::optional<T>& value) {
    if (value) set(key, to_text(*value));
  }
  void set_if(const char* key, const std::string& value) {
    if (!value.empty()) set(key, value);
  }

  void restrict_to(const std::vector<std::string>& ids) {
    if (ids.empty()) return;
    std::string joined;
    for (const auto& id : ids) joined += (joined.empty() ? "" : ",") + id;
    set("problems", joined);
  }

  void configure(const PipelineArgs& a) {
    restrict_to(a.problems);
    set_if("base_url", a.base_url);
    set_if("model", a.model);
    set_if("judge_base_url", a.judge_base_url);
    set_if("judge_model", a.judge_model);
    set_if("temperature", a.temperature);
    set_if("judge_temperature", a.judge_temperature);
    set_if("max_tokens", a.max_tokens);
    set_if("extra_body", a.extra_body);
    set_if("parallelism", a.parallelism);
    set_if("max_attempts", a.max_attempts);
    set_if("backoff", a.backoff);
    set_if("request_timeout", a.request_timeout);
    set_if("templates", a.templates);
    set("seed", std::to_string(a.seed));
    set_if("jobs", a.jobs);
    set_if("interpreter", a.interpreter);
    set_if("timeout", a.timeout);
    set_if("output_cap", a.output_cap);
    set_if("samples", a.samples);
    set_if("judge_samples", a.judge_samples);
    set_if("score_pattern", a.score_pattern);
    set("n", std::to_string(a.n));
    if (const char* key = std::getenv("PORTFOLIO_API_KEY")) set("api_key", key);
    if (a.mock) {
      check(rp_mock_server_start(a.mock_fixtures.c_str(), 0, &mock_), "starting mock backend");
      set("base_url", rp_mock_server_url(mock_));
      set("judge_base_url", rp_mock_server_url(mock_));
      set("api_key", "mock");
      set("backoff", "0.01");
    }
  }

  rp_pipeline* get() { return handle_; }

 private:
  rp_pipeline* handle_ = nullptr;
  rp_mock_server* mock_ = nullptr;
};

int report_stage(const char* name, const rp_stage_stats& s) {
  std::cout << name << ": " << s.problems << " problems, " << s.records_written << " records written, "
            << s.cache_hits << " cached, " << s.backend_requests << " backend requests, " << s.failed_problems
            << " failed" << std::endl;
  return s.failed_problems > 0 ? kExitRuntime : kExitOk;
}

int run_simulate(const SimulateArgs& a) {
  rp_sweep* sweep = nullptr;
  check(rp_sweep_create(&sweep), "simulate");
  std::unique_ptr<rp_sweep, void (*)(rp_sweep*)> guard(sweep, rp_sweep_free);
  for (const auto k : a.k_values) check(rp_sweep_add_k(sweep, k), "--K");
  for (const auto& g : a.generators) check(rp_sweep_add_generator(sweep, g.c_str()), "--generators");
  for (const auto e : a.epsilons) check(rp_sweep_add_epsilon(sweep, e), "--eps");
  for (const auto al : a.alphas) check(rp_sweep_add_alpha(sweep, al), "--alphas");
  check(rp_sweep_set_alpha_step(sweep, a.alpha_step), "--alpha-step");
  check(rp_sweep_set_seeds(sweep, a.seeds), "--seeds");
  check(rp_sweep_set_jobs(sweep, a.jobs), "--jobs");
  check(rp_sweep_run(sweep), "simulate");
  check(rp_sweep_write_csv(sweep, a.out.c_str()), "--out");
  if (!a.aggregate_out.empty()) check(rp_sweep_write_aggregate_csv(sweep, a.aggregate_out.c_str()), "--aggregate-out");
  rp_theorem_check tc{};
  check(rp_sweep_theorem_check(sweep, &tc), "theorem check");
  std::cout << "runs: " << rp_sweep_record_count(sweep) << "\n"
            << "exact coverage (aligned evaluator => coverage 1): " << tc.exact_coverage_violations << " violations in "
            << tc.exact_coverage_checked << " checked runs\n"
            << "coverage bound (aligned generator => coverage > (1-2 alpha)/k*): " << tc.coverage_bound_violations
            << " violations in " << tc.coverage_bound_checked << " checked runs" << std::endl;
  if (tc.exact_coverage_violations + tc.coverage_bound_violations > 0) {
    std::cerr << "error: theorem check failed" << std::endl;
    return kExitRuntime;
  }
  return kExitOk;
}

// Config file keys are long option names; a [section] limits keys to one
// subcommand. Values become option defaults, so flags and environment
// variables still win.
void apply_config_file(CLI::App& app, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure{kExitUsage, "cannot read config file " + path};
  const auto items = CLI::ConfigTOML().from_config(in);
  for (const CLI::ConfigItem& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::vector<CLI::App*> targets;
    if (!item.parents.empty() && item.parents.front() != "default") {
      CLI::App* sub = app.get_subcommand_no_throw(item.parents.front());
      if (sub == nullptr) throw Failure{kExitUsage, "config section [" + item.parents.front() + "] is not a command"};
      targets.push_back(sub);
    } else {
      targets = app.get_subcommands([](CLI::App*) { return true; });
    }
    std::string value;
    for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
    bool used = false;
    for (CLI::App* sub : targets) {
      if (CLI::Option* opt = sub->get_option_no_throw("--" + item.name)) {
        try {
          opt->run_callback_for_default()->default_val(value);
          opt->required(false);
        } catch (const CLI::Error& e) {
          throw Failure{kExitUsage, "config key " + item.fullname() + ": " + e.what()};
        }
        used = true;
      }
    }
    if (!used) throw Failure{kExitUsage, "unknown config key " + item.fullname()};
  }
}

std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  if (const char* env = std::getenv("PORTFOLIO_CONFIG")) return env;
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluator-ranked candidate portfolios: simulation sweeps and an LLM pipeline", "rportfolio"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", rp_version());
  std::string config_path;
  app.add_option("--config", config_path, "Flat key = value file of option defaults ([command] sections allowed)")
      ->envname("PORTFOLIO_CONFIG");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a simulated coverage sweep");
  simulate->add_option("--K", sim.k_values, "Candidate set sizes")->required()->delimiter(',');
  simulate->add_option("--generators", sim.generators, "aligned, weakly_aligned, uniform, misaligned")
      ->delimiter(',')
      ->capture_default_str();
  simulate->add_option("--eps", sim.epsilons, "Evaluator misranking fractions")->delimiter(',')->capture_default_str();
  simulate->add_option("--seeds", sim.seeds, "Seeds per tuple")->capture_default_str();
  simulate->add_option("--alpha-step", sim.alpha_step, "Alpha grid step")->capture_default_str();
  simulate->add_option("--alphas", sim.alphas, "Explicit alphas (replaces the grid)")->delimiter(',');
  simulate->add_option("--out", sim.out, "Per-run CSV")->required();
  simulate->add_option("--aggregate-out", sim.aggregate_out, "Aggregate CSV (mean and 95% CI)");
  simulate->add_option("--jobs", sim.jobs, "Worker threads, 0 = all cores")->capture_default_str();

  PipelineArgs gen_args, eval_args, judge_args, port_args, rep_args;

  auto* generate = app.add_subcommand("generate", "Sample candidate models into the cache");
  add_store_options(generate, gen_args, true);
  add_backend_options(generate, gen_args);
  generate->add_option("--n", gen_args.n, "Samples per problem")->envname("PORTFOLIO_N")->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "Execute and rank cached candidates");
  add_store_options(evaluate, eval_args, true);
  add_backend_options(evaluate, eval_args);
  eval_args.mode = "both";
  evaluate->add_option("--mode", eval_args.mode, "llm, genprob or both")
      ->check(CLI::IsMember({"llm", "genprob", "both"}))
      ->capture_default_str();

  auto* judge = app.add_subcommand("judge", "Score cached candidates against the ground truth");
  add_store_options(judge, judge_args, true);
  add_backend_options(judge, judge_args);
  add_judge_options(judge, judge_args);

  auto* portfolio = app.add_subcommand("portfolio", "Build portfolios and write the review report");
  add_store_options(portfolio, port_args, false);
  port_args.mode = "llm";
  portfolio->add_option("--mode", port_args.mode, "Evaluator ranking to use")
      ->check(CLI::IsMember({"llm", "genprob"}))
      ->capture_default_str();
  auto* alpha = portfolio->add_option("--alpha", port_args.alpha, "Mass threshold: cumulative p >= 1 - alpha");
  auto* size = portfolio->add_option("--size", port_args.size, "Take the top-s ranked candidates");
  alpha->excludes(size);
  portfolio->add_option("--problem", port_args.problem, "Single problem id");
  portfolio->add_option("--out", port_args.out, "Markdown review report (default: stdout)");

  auto* report = app.add_subcommand("report", "Compare portfolios with random baselines");
  add_store_options(report, rep_args, false);
  report->add_option("--sizes", rep_args.sizes, "Portfolio sizes")->delimiter(',')->capture_default_str();
  report->add_option("--baseline-draws", rep_args.baseline_draws, "Random subsets per size")->capture_default_str();
  report->add_option("--seed", rep_args.seed, "Seed for the random draws")
      ->envname("PORTFOLIO_SEED")
      ->capture_default_str();
  report->add_option("--out", rep_args.out, "Report CSV")->required();

  std::string fixtures = RP_DEFAULT_FIXTURES;
  int port = 0;
  auto* mock_server = app.add_subcommand("mock-server", "Serve the deterministic mock backend until interrupted");
  mock_server->add_option("--fixtures", fixtures, "Fixture file")->envname("PORTFOLIO_MOCK_FIXTURES")
      ->capture_default_str();
  mock_server->add_option("--port", port, "Port, 0 picks a free one")->capture_default_str();

  try {
    if (const std::string path = find_config_path(argc, argv); !path.empty()) apply_config_file(app, path);
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << std::endl;
    return f.exit_code;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim);

    if (generate->parsed()) {
      PipelineHandle p(gen_args);
      p.configure(gen_args);
      rp_stage_stats stats{};
      check(rp_pipeline_generate(p.get(), &stats), "generate");
      return report_stage("generate", stats);
    }
    if (evaluate->parsed()) {
      PipelineHandle p(eval_args);
      p.configure(eval_args);
      int code = kExitOk;
      for (const char* mode : {"genprob", "llm"}) {
        if (eval_args.mode != "both" && eval_args.mode != mode) continue;
        rp_stage_stats stats{};
        check(rp_pipeline_evaluate(p.get(), mode, &stats), std::string("evaluate ") + mode);
        code = std::max(code, report_stage((std::string("evaluate ") + mode).c_str(), stats));
      }
      return code;
    }
    if (judge->parsed()) {
      PipelineHandle p(judge_args);
      p.configure(judge_args);
      rp_stage_stats stats{};
      check(rp_pipeline_judge(p.get(), &stats), "judge");
      return report_stage("judge", stats);
    }
    if (portfolio->parsed()) {
      if (!port_args.alpha && !port_args.size) throw Failure{kExitUsage, "portfolio needs --alpha or --size"};
      if (port_args.size && *port_args.size == 0) throw Failure{kExitUsage, "--size must be >= 1"};
      PipelineHandle p(port_args);
      p.restrict_to(port_args.problems);
      char* listing = nullptr;
      char* review = nullptr;
      check(rp_pipeline_portfolio(p.get(), port_args.mode.c_str(), port_args.alpha.value_or(0.0),
                                  port_args.size.value_or(0),
                                  port_args.problem.empty() ? nullptr : port_args.problem.c_str(), &listing, &review),
            "portfolio");
      std::cout << take_string(listing);
      const std::string text = take_string(review);
      if (port_args.out.empty()) {
        std::cout << "\n" << text;
      } else {
        std::ofstream out(port_args.out, std::ios::binary);
        out << text;
        if (!out) throw Failure{kExitRuntime, "cannot write " + port_args.out};
        std::cout << "review written to " << port_args.out << std::endl;
      }
      return kExitOk;
    }
    if (report->parsed()) {
      PipelineHandle p(rep_args);
      p.restrict_to(rep_args.problems);
      char* summary = nullptr;
      check(rp_pipeline_report(p.get(), rep_args.sizes.data(), rep_args.sizes.size(), rep_args.baseline_draws,
                               rep_args.seed, rep_args.out.c_str(), &summary),
            "report");
      std::cout << take_string(summary);
      return kExitOk;
    }
    if (mock_server->parsed()) {
      sigset_t signals;
      sigemptyset(&signals);
      sigaddset(&signals, SIGINT);
      sigaddset(&signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &signals, nullptr);
      rp_mock_server* server = nullptr;
      check(rp_mock_server_start(fixtures.c_str(), port, &server), "mock-server");
      std::cout << "serving " << rp_mock_server_url(server) << std::endl;
      int received = 0;
      sigwait(&signals, &received);
      std::cout << "stopping after " << rp_mock_server_request_count(server) << " requests" << std::endl;
      rp_mock_server_stop(server);
      return kExitOk;
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << std::endl;
    return f.exit_code;
  }
  return kExitUsage;
}
