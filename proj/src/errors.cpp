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

#include "attribench/errors.hpp"

namespace attribench {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EMPTY_INPUT";
    case ErrorCode::kCapabilityMissing: return "CAPABILITY_MISSING";
    case ErrorCode::kDimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::kBackendUnavailable: return "BACKEND_UNAVAILABLE";
    case ErrorCode::kSequenceTooLong: return "SEQUENCE_TOO_LONG";
    case ErrorCode::kLabelOutOfRange: return "LABEL_OUT_OF_RANGE";
    case ErrorCode::kDegenerateDesign: return "DEGENERATE_DESIGN";
    case ErrorCode::kBudgetTooSmall: return "BUDGET_TOO_SMALL";
    case ErrorCode::kAlignmentError: return "ALIGNMENT_ERROR";
    case ErrorCode::kMissingRationale: return "MISSING_RATIONALE";
    case ErrorCode::kAllZeroScores: return "ALL_ZERO_SCORES";
    case ErrorCode::kEmptyDataset: return "EMPTY_DATASET";
    case ErrorCode::kMissingGoldLabels: return "MISSING_GOLD_LABELS";
    case ErrorCode::kInconsistentScopes: return "INCONSISTENT_SCOPES";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kInvariantViolation: return "INVARIANT_VIOLATION";
    case ErrorCode::kUnknownLabel: return "UNKNOWN_LABEL";
    case ErrorCode::kConfigError: return "CONFIG_ERROR";
    case ErrorCode::kApiError: return "API_ERROR";
    case ErrorCode::kTimeout: return "TIMEOUT";
    case ErrorCode::kValidationError: return "VALIDATION_ERROR";
    case ErrorCode::kInvalidArgument: return "BAD_REQUEST";
    case ErrorCode::kProtocolError: return "PROTOCOL_ERROR";
    case ErrorCode::kInternal: return "INTERNAL";
  }
  return "INTERNAL";
}

ErrorCode error_code_from_name(std::string_view name) {
  for (int c = 0; c <= static_cast<int>(ErrorCode::kInternal); ++c) {
    const auto code = static_cast<ErrorCode>(c);
    if (error_code_name(code) == name) return code;
  }
  return ErrorCode::kInternal;
}

}  // namespace attribench
