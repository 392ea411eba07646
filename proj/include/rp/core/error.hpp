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

#include <stdexcept>
#include <string>

namespace rp {

// Mirrors rp_status in rp.h; values must stay in sync.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kDomainMismatch = 2,
  kInvalidAlpha = 3,
  kInvalidDistribution = 4,
  kOutOfRange = 5,
  kInvalidK = 6,
  kInfeasibleEpsilon = 7,
  kEmptyInput = 8,
  kSchemaViolation = 9,
  kBackendUnreachable = 10,
  kMissingLogprobs = 11,
  kRunnerMisconfigured = 12,
  kMissingGroundTruth = 13,
  kIo = 14,
  kTheoremViolation = 15,
  kMissingData = 16,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rp
