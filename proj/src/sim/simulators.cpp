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

#include "rp/sim/simulators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "rp/core/error.hpp"

namespace rp::sim {

namespace {

std::vector<double> normalized_draws(std::size_t count, double total, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> draws(count);
  for (double& d : draws) d = unit(rng);
  const double sum = std::accumulate(draws.begin(), draws.end(), 0.0);
  for (double& d : draws) d = d / sum * total;
  return draws;
}

std::vector<double> linear_weights(std::size_t k, bool decreasing) {
  // Sum of 1..K.
  const double norm = static_cast<double>(k) * static_cast<double>(k + 1) / 2.0;
  std::vector<double> probs(k);
  for (std::size_t i = 1; i <= k; ++i) {
    const double weight = decreasing ? static_cast<double>(k + 1 - i) : static_cast<double>(i);
    probs[i - 1] = weight / norm;
  }
  return probs;
}

}  // namespace

std::string_view to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kAligned: return "aligned";
    case GeneratorKind::kWeaklyAligned: return "weakly_aligned";
    case GeneratorKind::kUniform: return "uniform";
    case GeneratorKind::kMisaligned: return "misaligned";
  }
  return "unknown";
}

GeneratorKind parse_generator_kind(std::string_view name) {
  for (const GeneratorKind kind : {GeneratorKind::kAligned, GeneratorKind::kWeaklyAligned,
                                   GeneratorKind::kUniform, GeneratorKind::kMisaligned}) {
    if (name == to_string(kind)) return kind;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown generator kind '" + std::string(name) +
                  "' (expected aligned, weakly_aligned, uniform or misaligned)");
}

GeneratorDistribution make_generator(GeneratorKind kind, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kInvalidK, "simulated generators need K >= 2");
  switch (kind) {
    case GeneratorKind::kAligned:
      return GeneratorDistribution(linear_weights(k, /*decreasing=*/true));
    case GeneratorKind::kMisaligned:
      return GeneratorDistribution(linear_weights(k, /*decreasing=*/false));
    case GeneratorKind::kUniform:
      return GeneratorDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
    case GeneratorKind::kWeaklyAligned: {
      if (k % 2 != 0) {
        throw Error(ErrorCode::kInvalidK,
                    "weakly_aligned needs an even K, got " + std::to_string(k));
      }
      std::mt19937_64 rng(seed);
      const double top_mass = std::uniform_real_distribution<double>(0.5, 0.99)(rng);
      std::vector<double> probs = normalized_draws(k / 2, top_mass, rng);
      const std::vector<double> bottom = normalized_draws(k / 2, 1.0 - top_mass, rng);
      probs.insert(probs.end(), bottom.begin(), bottom.end());
      return GeneratorDistribution(std::move(probs));
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown generator kind");
}

std::size_t misranked_count(double epsilon, std::size_t k) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorCode::kInfeasibleEpsilon,
                "evaluator error must lie in [0, 1], got " + std::to_string(epsilon));
  }
  // 0.3 * 10 is 3.0000000000000004 in binary; without the guard ceil gives 4.
  const double scaled = epsilon * static_cast<double>(k);
  const double m = std::ceil(scaled - 1e-9 * std::max(1.0, scaled));
  return static_cast<std::size_t>(std::max(0.0, m));
}

EvaluatorRanking make_evaluator(double epsilon, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kInvalidK, "simulated evaluators need K >= 2");
  const std::size_t m = misranked_count(epsilon, k);
  std::vector<CandidateId> order = detail::Permutation::identity_order(k);
  if (epsilon == 1.0) {
    std::ranges::reverse(order);
    return EvaluatorRanking(std::move(order));
  }
  if (m == 1) {
    throw Error(ErrorCode::kInfeasibleEpsilon,
                "epsilon " + std::to_string(epsilon) + " with K=" + std::to_string(k) +
                    " asks for exactly one misranked candidate, which no permutation has");
  }
  if (m == 0) return EvaluatorRanking(std::move(order));

  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> positions(k);
  std::iota(positions.begin(), positions.end(), 0U);
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, k - 1);
    std::swap(positions[i], positions[pick(rng)]);
  }
  positions.resize(m);
  std::ranges::sort(positions);

  // Rejection sampling gives a uniform derangement; expected ~e attempts.
  std::vector<std::uint32_t> shuffled = positions;
  bool has_fixed_point = true;
  while (has_fixed_point) {
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    has_fixed_point = false;
    for (std::size_t i = 0; i < m; ++i) {
      if (shuffled[i] == positions[i]) {
        has_fixed_point = true;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) order[positions[i]] = CandidateId{shuffled[i]};
  return EvaluatorRanking(std::move(order));
}

}  // namespace rp::sim
