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
#include <string>
#include <string_view>

#include "rp/core/portfolio.hpp"

namespace rp::sim {

/// Synthetic generator constructions at four levels of human alignment.
/// All are indexed in human-rank order: candidate 0 is the human favourite.
enum class GeneratorKind { kAligned, kWeaklyAligned, kUniform, kMisaligned };

std::string_view to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(std::string_view name);

/// Builds p over K candidates.
///
///   aligned         p(i) proportional to K + 1 - i
///   weakly_aligned  top-half mass M ~ U[0.5, 0.99); each half spreads its
///                   mass by normalizing K/2 uniform(0,1) draws
///   uniform         p(i) = 1/K
///   misaligned      p(i) proportional to i
///
/// Throws InvalidK for K < 2, or odd K with weakly_aligned.
GeneratorDistribution make_generator(GeneratorKind kind, std::size_t k, std::uint64_t seed);

/// Number of misranked positions an evaluator with error epsilon has on K
/// candidates, ceil(epsilon * K) guarded against representation error.
std::size_t misranked_count(double epsilon, std::size_t k);

/// Evaluator ranking whose mismatch fraction against the identity is epsilon.
/// epsilon = 0 is the identity, epsilon = 1 is the full reversal; otherwise a
/// uniformly random set of ceil(epsilon*K) positions is deranged.
EvaluatorRanking make_evaluator(double epsilon, std::size_t k, std::uint64_t seed);

}  // namespace rp::sim
