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

// Test-only reference implementations. These deliberately share no code with
// the library: probabilities are integer counts over a common denominator and
// every threshold comparison is exact.

#include <cstdint>
#include <random>
#include <set>
#include <vector>

namespace rp::test {

struct ExactDistribution {
  std::vector<std::int64_t> counts;  // p(i) = counts[i] / denominator
  std::int64_t denominator = 1;

  std::vector<double> as_doubles() const {
    std::vector<double> p;
    for (auto c : counts) p.push_back(static_cast<double>(c) / static_cast<double>(denominator));
    return p;
  }
};

// Smallest k with sum_{i<k} p(order[i]) >= 1 - alpha_num/alpha_den, recomputing
// each prefix sum from scratch.
inline std::size_t brute_force_k_star(const std::vector<std::uint32_t>& order,
                                      const ExactDistribution& dist, std::int64_t alpha_num,
                                      std::int64_t alpha_den) {
  for (std::size_t k = 1; k <= order.size(); ++k) {
    std::int64_t mass = 0;
    for (std::size_t i = 0; i < k; ++i) mass += dist.counts[order[i]];
    if (mass * alpha_den >= (alpha_den - alpha_num) * dist.denominator) return k;
  }
  return order.size();
}

inline double brute_force_coverage(const std::vector<std::uint32_t>& members,
                                   const std::vector<std::uint32_t>& human) {
  const std::set<std::uint32_t> top(human.begin(), human.begin() + members.size());
  std::size_t hits = 0;
  for (auto m : members) hits += top.count(m);
  return static_cast<double>(hits) / static_cast<double>(members.size());
}

// Random distribution on the 1/denominator grid.
inline ExactDistribution random_grid_distribution(std::size_t k, std::int64_t denominator,
                                                  std::mt19937_64& rng) {
  ExactDistribution d;
  d.denominator = denominator;
  d.counts.assign(k, 0);
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  for (std::int64_t unit = 0; unit < denominator; ++unit) ++d.counts[pick(rng)];
  return d;
}

inline std::vector<std::uint32_t> random_permutation(std::size_t k, std::mt19937_64& rng) {
  std::vector<std::uint32_t> order(k);
  for (std::size_t i = 0; i < k; ++i) order[i] = static_cast<std::uint32_t>(i);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace rp::test
