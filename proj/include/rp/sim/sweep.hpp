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

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rp/sim/simulators.hpp"

namespace rp::sim {

struct SweepConfig {
  std::vector<std::size_t> k_values;
  std::vector<GeneratorKind> generators;
  std::vector<double> epsilons;
  // Explicit alpha values; when empty the grid {step, 2 step, ...} < 1 is used.
  std::vector<double> alphas;
  double alpha_step = 0.02;
  std::size_t seeds = 40;
  // Worker threads; 0 means hardware concurrency. Results do not depend on it.
  std::size_t jobs = 0;

  std::vector<double> alpha_values() const;
  void validate() const;
};

/// Open grid {step, 2 step, ...} strictly inside (0, 1).
std::vector<double> alpha_grid(double step);

struct SweepRecord {
  GeneratorKind generator = GeneratorKind::kAligned;
  double epsilon = 0.0;
  std::size_t k = 0;
  double alpha = 0.0;
  std::size_t seed = 0;
  std::size_t k_star = 0;
  double coverage = 0.0;
  // Alignment predicates evaluated on the realized generator and evaluator;
  // not written to CSV.
  bool generator_aligned = false;
  bool evaluator_aligned = false;
};

/// Seed for the (kind, epsilon, K, seed index) tuple. Alpha is not part of the
/// key: one generator/evaluator pair is swept across the whole alpha grid.
std::uint64_t tuple_seed(GeneratorKind kind, double epsilon, std::size_t k, std::size_t seed_index);

/// Runs every (kind, epsilon, K, seed, alpha) tuple. Records come back ordered
/// by that nesting, independent of config.jobs.
std::vector<SweepRecord> run_sweep(const SweepConfig& config);

struct TheoremCheck {
  std::size_t exact_coverage_checked = 0;
  std::size_t exact_coverage_violations = 0;
  std::size_t coverage_bound_checked = 0;
  std::size_t coverage_bound_violations = 0;
  std::vector<SweepRecord> violations;

  bool ok() const { return exact_coverage_violations == 0 && coverage_bound_violations == 0; }
};

/// Aligned evaluator => coverage == 1. Aligned generator and alpha < 1/2 =>
/// coverage > (1 - 2 alpha) / k*.
TheoremCheck check_theorems(const std::vector<SweepRecord>& records);

enum class Metric { kCoverage, kSize };

struct AggregateStat {
  GeneratorKind generator = GeneratorKind::kAligned;
  double epsilon = 0.0;
  std::size_t k = 0;
  double alpha = 0.0;
  Metric metric = Metric::kCoverage;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
};

/// Mean and normal-approximation 95% interval (mean +- 1.96 s / sqrt(n), s the
/// sample standard deviation, 0 when n = 1) of coverage and k* for each
/// (kind, epsilon, K, alpha) group, in first-appearance order.
std::vector<AggregateStat> aggregate(const std::vector<SweepRecord>& records);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records);
std::vector<SweepRecord> read_sweep_csv(std::istream& in);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateStat>& stats);

}  // namespace rp::sim
