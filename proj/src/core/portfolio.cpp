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

#include "rp/core/portfolio.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "rp/core/error.hpp"

namespace rp {

namespace {

void require_same_universe(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::kDomainMismatch,
                std::string(what) + ": candidate sets differ (" + std::to_string(a) +
                    " vs " + std::to_string(b) + " candidates)");
  }
}

}  // namespace

CandidateSet::CandidateSet(std::size_t size) : size_(size) {
  if (size == 0) throw Error(ErrorCode::kInvalidK, "candidate set must be non-empty");
}

std::vector<CandidateId> CandidateSet::ids() const {
  return detail::Permutation::identity_order(size_);
}

GeneratorDistribution::GeneratorDistribution(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (probs_.empty()) {
    throw Error(ErrorCode::kInvalidDistribution, "distribution over an empty candidate set");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    const double p = probs_[i];
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorCode::kInvalidDistribution,
                  "probability of candidate " + std::to_string(i) + " is not a non-negative number");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw Error(ErrorCode::kInvalidDistribution,
                "probabilities sum to " + std::to_string(total) + ", expected 1");
  }
}

namespace detail {

Permutation::Permutation(std::vector<CandidateId> order) : order_(std::move(order)) {
  if (order_.empty()) throw Error(ErrorCode::kInvalidK, "ranking over an empty candidate set");
  std::vector<bool> seen(order_.size(), false);
  for (const CandidateId id : order_) {
    if (id.value >= order_.size() || seen[id.value]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "ranking is not a permutation of 0.." + std::to_string(order_.size() - 1));
    }
    seen[id.value] = true;
  }
}

std::vector<CandidateId> Permutation::identity_order(std::size_t size) {
  std::vector<CandidateId> order(size);
  for (std::size_t i = 0; i < size; ++i) order[i] = CandidateId{static_cast<std::uint32_t>(i)};
  return order;
}

}  // namespace detail

Portfolio build_portfolio(const EvaluatorRanking& ranking, const GeneratorDistribution& dist,
                          double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidAlpha, "alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  require_same_universe(ranking.size(), dist.size(), "build_portfolio");

  const double target = 1.0 - alpha;
  Portfolio portfolio;
  portfolio.alpha = alpha;
  portfolio.universe = ranking.size();
  portfolio.members.reserve(ranking.size());
  double mass = 0.0;
  for (const CandidateId id : ranking.order()) {
    mass += dist[id];
    portfolio.members.push_back(id);
    if (mass >= target - kMassTolerance) break;
  }
  // If the scan runs off the end the distribution summed to 1 - O(1e-9) and
  // alpha was smaller than that slack; the whole ranking is the portfolio.
  portfolio.k_star = portfolio.members.size();
  portfolio.cumulative_mass = mass;
  return portfolio;
}

Portfolio truncate_ranking(const EvaluatorRanking& ranking, const GeneratorDistribution& dist,
                           std::size_t size) {
  require_same_universe(ranking.size(), dist.size(), "truncate_ranking");
  if (size == 0 || size > ranking.size()) {
    throw Error(ErrorCode::kOutOfRange, "portfolio size " + std::to_string(size) +
                                            " outside 1.." + std::to_string(ranking.size()));
  }
  Portfolio portfolio;
  portfolio.universe = ranking.size();
  portfolio.members.assign(ranking.order().begin(), ranking.order().begin() + size);
  portfolio.k_star = size;
  for (const CandidateId id : portfolio.members) portfolio.cumulative_mass += dist[id];
  return portfolio;
}

double coverage(const Portfolio& portfolio, const HumanRanking& human) {
  require_same_universe(portfolio.universe, human.size(), "coverage");
  if (portfolio.k_star == 0 || portfolio.k_star != portfolio.members.size()) {
    throw Error(ErrorCode::kInvalidArgument, "coverage of an empty or inconsistent portfolio");
  }
  std::vector<bool> in_human_top(human.size(), false);
  for (std::size_t i = 0; i < portfolio.k_star; ++i) in_human_top[human.at_rank(i).value] = true;

  std::size_t hits = 0;
  for (const CandidateId id : portfolio.members) {
    if (id.value >= human.size()) {
      throw Error(ErrorCode::kDomainMismatch, "portfolio member outside the human candidate set");
    }
    if (in_human_top[id.value]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(portfolio.k_star);
}

double coverage_lower_bound(const Portfolio& portfolio) {
  if (!(portfolio.alpha < 0.5)) {
    throw Error(ErrorCode::kOutOfRange,
                "coverage bound requires alpha < 1/2, got " + std::to_string(portfolio.alpha));
  }
  if (portfolio.k_star == 0) throw Error(ErrorCode::kInvalidArgument, "empty portfolio");
  return (1.0 - 2.0 * portfolio.alpha) / static_cast<double>(portfolio.k_star);
}

bool is_generator_aligned(const GeneratorDistribution& dist, const HumanRanking& human) {
  require_same_universe(dist.size(), human.size(), "is_generator_aligned");
  // Pairwise i <= j reduces to adjacent non-increase along the human order.
  for (std::size_t i = 1; i < human.size(); ++i) {
    if (dist[human.at_rank(i - 1)] < dist[human.at_rank(i)]) return false;
  }
  return true;
}

bool is_evaluator_aligned(const EvaluatorRanking& ranking, const HumanRanking& human) {
  require_same_universe(ranking.size(), human.size(), "is_evaluator_aligned");
  return std::ranges::equal(ranking.order(), human.order());
}

}  // namespace rp
