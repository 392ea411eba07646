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

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rp {

/// Index of a candidate model within its candidate set (0..K-1).
struct CandidateId {
  std::uint32_t value = 0;

  friend auto operator<=>(const CandidateId&, const CandidateId&) = default;
};

/// A finite candidate space of size K with ids 0..K-1.
class CandidateSet {
 public:
  explicit CandidateSet(std::size_t size);

  std::size_t size() const noexcept { return size_; }
  bool contains(CandidateId id) const noexcept { return id.value < size_; }
  std::vector<CandidateId> ids() const;

  friend bool operator==(const CandidateSet&, const CandidateSet&) = default;

 private:
  std::size_t size_;
};

/// Probability mass p(o) over a candidate set, indexed by CandidateId.
///
/// Construction enforces p >= 0 and |sum p - 1| <= kSumTolerance.
class GeneratorDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit GeneratorDistribution(std::vector<double> probs);

  std::size_t size() const noexcept { return probs_.size(); }
  CandidateSet candidates() const { return CandidateSet(probs_.size()); }
  double operator[](CandidateId id) const { return probs_.at(id.value); }
  std::span<const double> probs() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

namespace detail {

// Permutation of 0..K-1; position i holds the candidate at rank i+1.
class Permutation {
 public:
  explicit Permutation(std::vector<CandidateId> order);

  std::size_t size() const noexcept { return order_.size(); }
  CandidateSet candidates() const { return CandidateSet(order_.size()); }
  CandidateId at_rank(std::size_t position) const { return order_.at(position); }
  std::span<const CandidateId> order() const noexcept { return order_; }

  static std::vector<CandidateId> identity_order(std::size_t size);

 private:
  std::vector<CandidateId> order_;
};

}  // namespace detail

/// The evaluator's strict total order; lower rank is better.
class EvaluatorRanking : public detail::Permutation {
 public:
  using Permutation::Permutation;
  static EvaluatorRanking identity(std::size_t size) { return EvaluatorRanking(identity_order(size)); }

  friend bool operator==(const EvaluatorRanking& a, const EvaluatorRanking& b) {
    return std::ranges::equal(a.order(), b.order());
  }
};

/// The human preference order the portfolio is measured against.
class HumanRanking : public detail::Permutation {
 public:
  using Permutation::Permutation;
  static HumanRanking identity(std::size_t size) { return HumanRanking(identity_order(size)); }
};

/// The shortest evaluator-ranking prefix whose cumulative generator mass
/// reaches 1 - alpha.
struct Portfolio {
  std::vector<CandidateId> members;
  std::size_t k_star = 0;
  double alpha = 0.0;
  double cumulative_mass = 0.0;
  // Size of the candidate set the portfolio was drawn from.
  std::size_t universe = 0;
};

// Absolute slack on the cumulative-mass threshold test.
inline constexpr double kMassTolerance = 1e-12;

Portfolio build_portfolio(const EvaluatorRanking& ranking,
                          const GeneratorDistribution& dist, double alpha);

// Top-s prefix of the ranking without a mass threshold. alpha is recorded as 0.
Portfolio truncate_ranking(const EvaluatorRanking& ranking,
                           const GeneratorDistribution& dist, std::size_t size);

/// Fraction of the human top-k* that the portfolio contains.
double coverage(const Portfolio& portfolio, const HumanRanking& human);

/// (1 - 2 alpha) / k*, the strict coverage lower bound under an aligned
/// generator. Throws OutOfRange when alpha >= 1/2.
double coverage_lower_bound(const Portfolio& portfolio);

bool is_generator_aligned(const GeneratorDistribution& dist, const HumanRanking& human);

bool is_evaluator_aligned(const EvaluatorRanking& ranking, const HumanRanking& human);

}  // namespace rp
