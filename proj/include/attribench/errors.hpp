/*
 * Copyright 2026 The Attribench Authors.
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

#ifndef ATTRIBENCH_ERRORS_HPP_
#define ATTRIBENCH_ERRORS_HPP_

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace attribench {

enum class ErrorCode {
  kEmptyInput,
  kCapabilityMissing,
  kDimensionMismatch,
  kBackendUnavailable,
  kSequenceTooLong,
  kLabelOutOfRange,
  kDegenerateDesign,
  kBudgetTooSmall,
  kAlignmentError,
  kMissingRationale,
  kAllZeroScores,
  kEmptyDataset,
  kMissingGoldLabels,
  kInconsistentScopes,
  kParseError,
  kInvariantViolation,
  kUnknownLabel,
  kConfigError,
  kApiError,
  kTimeout,
  kValidationError,
  kInvalidArgument,
  kProtocolError,
  kInternal,
};

std::string_view error_code_name(ErrorCode code);
// Inverse of error_code_name; unknown names map to kInternal.
ErrorCode error_code_from_name(std::string_view name);

// Every failure surfaced by the library carries a stable code so callers
// (CLI exit codes, wire-protocol error responses, per-cell fault records)
// can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<int> row = std::nullopt)
      : std::runtime_error(message), code_(code), row_(row) {}

  ErrorCode code() const noexcept { return code_; }
  // Set for loader errors that point at an input record.
  std::optional<int> row() const noexcept { return row_; }

 private:
  ErrorCode code_;
  std::optional<int> row_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace attribench

#endif  // ATTRIBENCH_ERRORS_HPP_
