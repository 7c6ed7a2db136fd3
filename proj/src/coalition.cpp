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

#include "attribench/coalition.hpp"

#include "attribench/errors.hpp"

namespace attribench::explain {

double CoalitionGame::value(const Coalition& coalition) {
  return values(std::span<const Coalition>(&coalition, 1)).front();
}

std::vector<double> FunctionGame::values(std::span<const Coalition> coalitions) {
  std::vector<double> out;
  out.reserve(coalitions.size());
  for (const auto& c : coalitions) out.push_back(fn_(c));
  return out;
}

CoalitionValueFn::CoalitionValueFn(const Backend& backend, const TokenSequence& seq, int target)
    : CoalitionValueFn(backend, seq, target,
                       backend.info().mask_token_id ? MaskingMode::kMaskToken
                                                    : MaskingMode::kRemove) {}

CoalitionValueFn::CoalitionValueFn(const Backend& backend, const TokenSequence& seq, int target,
                                   MaskingMode mode)
    : backend_(backend), seq_(seq), target_(target), mode_(mode) {
  if (seq_.empty()) fail(ErrorCode::kEmptyInput, "coalition game over an empty sequence");
  if (target < 0 || target >= backend.info().n_classes) {
    fail(ErrorCode::kInvalidArgument, "target class out of range");
  }
  if (mode == MaskingMode::kMaskToken && !backend.info().mask_token_id) {
    fail(ErrorCode::kCapabilityMissing, "mask_token masking needs a backend mask token");
  }
}

TokenSequence CoalitionValueFn::perturbed(const Coalition& coalition) const {
  if (mode_ == MaskingMode::kRemove) return seq_.subsequence(coalition);
  std::vector<bool> replace(coalition.size());
  for (std::size_t i = 0; i < coalition.size(); ++i) replace[i] = !coalition[i];
  return seq_.with_replaced(replace, *backend_.info().mask_token_id, backend_.info().mask_token);
}

std::vector<double> CoalitionValueFn::values(std::span<const Coalition> coalitions) {
  std::vector<TokenSequence> pending;
  std::vector<const Coalition*> pending_keys;
  std::unordered_map<std::vector<bool>, bool> queued;
  for (const auto& c : coalitions) {
    if (c.size() != seq_.size()) fail(ErrorCode::kDimensionMismatch, "coalition size != token count");
    if (cache_.count(c) || !queued.emplace(c, true).second) continue;
    pending.push_back(perturbed(c));
    pending_keys.push_back(&c);
  }
  if (!pending.empty()) {
    const auto probs = backend_.predict_allow_empty(pending);
    for (std::size_t i = 0; i < pending.size(); ++i) cache_[*pending_keys[i]] = probs[i][target_];
    evaluations_ += pending.size();
  }
  std::vector<double> out;
  out.reserve(coalitions.size());
  for (const auto& c : coalitions) out.push_back(cache_.at(c));
  return out;
}

}  // namespace attribench::explain
