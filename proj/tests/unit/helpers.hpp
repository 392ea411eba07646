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

#include <initializer_list>
#include <vector>

#include "rp/core/portfolio.hpp"

namespace rp::test {

template <class Ranking>
Ranking ranking_of(const std::vector<std::uint32_t>& order) {
  std::vector<CandidateId> ids;
  for (auto v : order) ids.push_back(CandidateId{v});
  return Ranking(std::move(ids));
}

inline std::vector<std::uint32_t> ids_of(const std::vector<CandidateId>& members) {
  std::vector<std::uint32_t> out;
  for (auto id : members) out.push_back(id.value);
  return out;
}

}  // namespace rp::test
