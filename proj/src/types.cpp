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

#include "attribench/types.hpp"

#include <algorithm>

#include "attribench/errors.hpp"

namespace attribench {

void TokenSequence::validate() const {
  if (tokens.size() != ids.size() || tokens.size() != word_map.size()) {
    fail(ErrorCode::kInvariantViolation,
         "token sequence arrays differ in length: tokens=" +
             std::to_string(tokens.size()) + " ids=" +
             std::to_string(ids.size()) + " word_map=" +
             std::to_string(word_map.size()));
  }
  std::optional<int> last;
  for (const auto& w : word_map) {
    if (!w) continue;
    if (*w < 0 || (last && *w < *last)) {
      fail(ErrorCode::kInvariantViolation, "word_map must be non-decreasing");
    }
    last = w;
  }
}

TokenSequence TokenSequence::subsequence(const std::vector<bool>& keep) const {
  TokenSequence out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!keep[i]) continue;
    if (!out.text.empty()) out.text += ' ';
    out.text += tokens[i];
    out.tokens.push_back(tokens[i]);
    out.ids.push_back(ids[i]);
    out.word_map.push_back(word_map[i]);
  }
  return out;
}

TokenSequence TokenSequence::with_replaced(const std::vector<bool>& replace,
                                           std::int64_t id,
                                           const std::string& token) const {
  TokenSequence out = *this;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!replace[i]) continue;
    out.ids[i] = id;
    out.tokens[i] = token;
  }
  return out;
}

int ProbabilityVector::argmax() const {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) -
                          probs.begin());
}

ProbabilityVector ProbabilityVector::uniform(int n_classes) {
  return {std::vector<double>(n_classes, 1.0 / n_classes)};
}

bool BackendInfo::has(Capability c) const {
  return std::find(capabilities.begin(), capabilities.end(), c) !=
         capabilities.end();
}

bool BackendInfo::serves_native(const std::string& method) const {
  return has(Capability::kNativeAttribution) &&
         std::find(native_methods.begin(), native_methods.end(), method) !=
             native_methods.end();
}

std::string capability_name(Capability c) {
  switch (c) {
    case Capability::kGradients: return "gradients";
    case Capability::kEmbeddings: return "embeddings";
    case Capability::kNativeAttribution: return "native_attribution";
  }
  return "unknown";
}

std::optional<Capability> capability_from_name(const std::string& name) {
  for (auto c : {Capability::kGradients, Capability::kEmbeddings,
                 Capability::kNativeAttribution}) {
    if (capability_name(c) == name) return c;
  }
  return std::nullopt;
}

}  // namespace attribench
