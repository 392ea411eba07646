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

#include "rp/sim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>

#include "rp/core/error.hpp"
#include "rp/core/numfmt.hpp"
#include "rp/core/seeding.hpp"

namespace rp::sim {

namespace {

constexpr std::string_view kSweepHeader = "generator,epsilon,K,alpha,seed,k_star,coverage";
constexpr std::string_view kAggregateHeader = "generator,epsilon,K,alpha,metric,mean,ci_low,ci_high,n";

struct Unit {
  GeneratorKind kind;
  double epsilon;
  std::size_t k;
  std::size_t seed;
};

std::string describe(GeneratorKind kind, double epsilon, std::size_t k) {
  return "(generator=" + std::string(to_string(kind)) + ", epsilon=" + format_double(epsilon) +
         ", K=" + std::to_string(k) + ")";
}

void check_feasible(GeneratorKind kind, double epsilon, std::size_t k) {
  try {
    if (kind == GeneratorKind::kWeaklyAligned && k % 2 != 0) {
      throw Error(ErrorCode::kInvalidK, "weakly_aligned needs an even K");
    }
    if (epsilon != 1.0 && misranked_count(epsilon, k) == 1) {
      throw Error(ErrorCode::kInfeasibleEpsilon,
                  "exactly one misranked candidate is not a permutation");
    }
  } catch (const Error& e) {
    throw Error(e.code(), "infeasible sweep tuple " + describe(kind, epsilon, k) + ": " + e.what());
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::size_t parse_size(const std::string& text) {
  std::size_t value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kSchemaViolation, "not an unsigned integer: '" + text + "'");
  }
  return value;
}

}  // namespace

std::vector<double> alpha_grid(double step) {
  if (!(step > 0.0 && step < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha step must lie in (0, 1)");
  }
  std::vector<double> grid;
  for (std::size_t j = 1;; ++j) {
    // Snap to 12 decimals so 0.02 * 3 prints as 0.06.
    const double alpha = std::round(static_cast<double>(j) * step * 1e12) / 1e12;
    if (alpha >= 1.0 - 1e-12) break;
    grid.push_back(alpha);
  }
  return grid;
}

std::vector<double> SweepConfig::alpha_values() const {
  return alphas.empty() ? alpha_grid(alpha_step) : alphas;
}

void SweepConfig::validate() const {
  if (seeds == 0) throw Error(ErrorCode::kInvalidArgument, "sweep needs at least one seed");
  for (const std::size_t k : k_values) {
    if (k < 2) throw Error(ErrorCode::kInvalidK, "every K must be >= 2, got " + std::to_string(k));
  }
  for (const double eps : epsilons) {
    if (!(eps >= 0.0 && eps <= 1.0)) {
      throw Error(ErrorCode::kInfeasibleEpsilon, "epsilon " + format_double(eps) + " outside [0, 1]");
    }
  }
  if (alphas.empty()) {
    alpha_grid(alpha_step);
  } else {
    for (const double a : alphas) {
      if (!(a > 0.0 && a < 1.0)) {
        throw Error(ErrorCode::kInvalidAlpha, "alpha " + format_double(a) + " outside (0, 1)");
      }
    }
  }
}

std::uint64_t tuple_seed(GeneratorKind kind, double epsilon, std::size_t k, std::size_t seed_index) {
  const std::string key = std::string(to_string(kind)) + "|" + format_double(epsilon) + "|" +
                          std::to_string(k) + "|" + std::to_string(seed_index);
  return stable_seed(key);
}

std::vector<SweepRecord> run_sweep(const SweepConfig& config) {
  config.validate();
  const std::vector<double> alphas = config.alpha_values();

  std::vector<Unit> units;
  for (const GeneratorKind kind : config.generators) {
    for (const double eps : config.epsilons) {
      for (const std::size_t k : config.k_values) {
        check_feasible(kind, eps, k);
        for (std::size_t s = 0; s < config.seeds; ++s) units.push_back({kind, eps, k, s});
      }
    }
  }

  std::vector<SweepRecord> records(units.size() * alphas.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::optional<Error> first_error;

  auto worker = [&] {
    for (std::size_t u = next++; u < units.size(); u = next++) {
      const Unit& unit = units[u];
      try {
        const std::uint64_t seed = tuple_seed(unit.kind, unit.epsilon, unit.k, unit.seed);
        const GeneratorDistribution dist = make_generator(unit.kind, unit.k, stable_seed("generator") ^ seed);
        const EvaluatorRanking ranking = make_evaluator(unit.epsilon, unit.k, stable_seed("evaluator") ^ seed);
        const HumanRanking human = HumanRanking::identity(unit.k);
        const bool gen_aligned = is_generator_aligned(dist, human);
        const bool eval_aligned = is_evaluator_aligned(ranking, human);
        for (std::size_t a = 0; a < alphas.size(); ++a) {
          const Portfolio portfolio = build_portfolio(ranking, dist, alphas[a]);
          records[u * alphas.size() + a] =
              SweepRecord{unit.kind, unit.epsilon, unit.k, alphas[a], unit.seed,
                          portfolio.k_star, coverage(portfolio, human), gen_aligned, eval_aligned};
        }
      } catch (const Error& e) {
        std::lock_guard lock(error_mutex);
        if (!first_error) {
          first_error.emplace(e.code(), "sweep tuple " + describe(unit.kind, unit.epsilon, unit.k) +
                                            " seed " + std::to_string(unit.seed) + ": " + e.what());
        }
        next = units.size();
      }
    }
  };

  std::size_t jobs = config.jobs == 0 ? std::max(1U, std::thread::hardware_concurrency()) : config.jobs;
  jobs = std::min(jobs, std::max<std::size_t>(units.size(), 1));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(jobs);
    for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
  }
  if (first_error) throw *first_error;
  return records;
}

TheoremCheck check_theorems(const std::vector<SweepRecord>& records) {
  TheoremCheck check;
  for (const SweepRecord& r : records) {
    bool violated = false;
    if (r.evaluator_aligned) {
      ++check.exact_coverage_checked;
      if (r.coverage != 1.0) {
        ++check.exact_coverage_violations;
        violated = true;
      }
    }
    if (r.generator_aligned && r.alpha < 0.5) {
      ++check.coverage_bound_checked;
      const double bound = (1.0 - 2.0 * r.alpha) / static_cast<double>(r.k_star);
      if (!(r.coverage > bound)) {
        ++check.coverage_bound_violations;
        violated = true;
      }
    }
    if (violated && check.violations.size() < 20) check.violations.push_back(r);
  }
  return check;
}

std::vector<AggregateStat> aggregate(const std::vector<SweepRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "nothing to aggregate");

  using Key = std::tuple<int, double, std::size_t, double>;
  std::map<Key, std::size_t> index;
  std::vector<std::vector<const SweepRecord*>> groups;
  for (const SweepRecord& r : records) {
    const Key key{static_cast<int>(r.generator), r.epsilon, r.k, r.alpha};
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(&r);
  }

  auto summarize = [](const std::vector<const SweepRecord*>& group, Metric metric) {
    const SweepRecord& first = *group.front();
    AggregateStat stat{first.generator, first.epsilon, first.k, first.alpha, metric};
    stat.n = group.size();
    auto value = [metric](const SweepRecord* r) {
      return metric == Metric::kCoverage ? r->coverage : static_cast<double>(r->k_star);
    };
    double sum = 0.0;
    for (const SweepRecord* r : group) sum += value(r);
    stat.mean = sum / static_cast<double>(stat.n);
    double sd = 0.0;
    if (stat.n > 1) {
      double ss = 0.0;
      for (const SweepRecord* r : group) ss += (value(r) - stat.mean) * (value(r) - stat.mean);
      sd = std::sqrt(ss / static_cast<double>(stat.n - 1));
    }
    const double half_width = 1.96 * sd / std::sqrt(static_cast<double>(stat.n));
    stat.ci_low = stat.mean - half_width;
    stat.ci_high = stat.mean + half_width;
    return stat;
  };

  std::vector<AggregateStat> stats;
  stats.reserve(groups.size() * 2);
  for (const auto& group : groups) {
    stats.push_back(summarize(group, Metric::kCoverage));
    stats.push_back(summarize(group, Metric::kSize));
  }
  return stats;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  out << kSweepHeader << '\n';
  for (const SweepRecord& r : records) {
    out << to_string(r.generator) << ',' << format_double(r.epsilon) << ',' << r.k << ','
        << format_double(r.alpha) << ',' << r.seed << ',' << r.k_star << ','
        << format_double(r.coverage) << '\n';
  }
}

std::vector<SweepRecord> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSweepHeader) {
    throw Error(ErrorCode::kSchemaViolation, "sweep CSV must start with '" + std::string(kSweepHeader) + "'");
  }
  std::vector<SweepRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 7) {
      throw Error(ErrorCode::kSchemaViolation, "sweep CSV line " + std::to_string(line_no) +
                                                   ": expected 7 fields");
    }
    SweepRecord r;
    r.generator = parse_generator_kind(f[0]);
    r.epsilon = parse_double(f[1]);
    r.k = parse_size(f[2]);
    r.alpha = parse_double(f[3]);
    r.seed = parse_size(f[4]);
    r.k_star = parse_size(f[5]);
    r.coverage = parse_double(f[6]);
    records.push_back(r);
  }
  return records;
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateStat>& stats) {
  out << kAggregateHeader << '\n';
  for (const AggregateStat& s : stats) {
    out << to_string(s.generator) << ',' << format_double(s.epsilon) << ',' << s.k << ','
        << format_double(s.alpha) << ',' << (s.metric == Metric::kCoverage ? "coverage" : "size")
        << ',' << format_double(s.mean) << ',' << format_double(s.ci_low) << ','
        << format_double(s.ci_high) << ',' << s.n << '\n';
  }
}

}  // namespace rp::sim
