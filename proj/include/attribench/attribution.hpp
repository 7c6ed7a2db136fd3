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

#ifndef ATTRIBENCH_ATTRIBUTION_HPP_
#define ATTRIBENCH_ATTRIBUTION_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace attribench {

enum class Method {
  kSaliency,
  kGradientXInput,
  kIntegratedGradients,
  kDeepLift,
  kGuidedBackprop,
  kLime,
  kPartitionShap,
  kShapInteractions,
};

inline constexpr Method kAllMethods[] = {
    Method::kSaliency,       Method::kGradientXInput, Method::kIntegratedGradients,
    Method::kDeepLift,       Method::kGuidedBackprop, Method::kLime,
    Method::kPartitionShap,  Method::kShapInteractions,
};

std::string method_name(Method method);
std::optional<Method> method_from_name(const std::string& name);
// Comma-separated list of every method name, for usage errors.
std::string method_names_joined();

// Per-token importance from one explainer for one instance and target class.
struct Attribution {
  std::string instance_id;
  Method method = Method::kSaliency;
  int target_class = 0;
  std::vector<double> scores;
  std::vector<std::string> token_texts;
  nlohmann::json meta = nlohmann::json::object();

  // One score per token, all finite; throws kInvariantViolation otherwise.
  void validate() const;
};

// JSONL record: {"instance_id", "method", "target_class", "tokens",
// "scores", "meta"}.
nlohmann::json to_json(const Attribution& attribution);
Attribution attribution_from_json(const nlohmann::json& record);

}  // namespace attribench

#endif  // ATTRIBENCH_ATTRIBUTION_HPP_
