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

#include "attribench/attribution.hpp"

#include <cmath>

#include "attribench/errors.hpp"

namespace attribench {

std::string method_name(Method method) {
  switch (method) {
    case Method::kSaliency: return "saliency";
    case Method::kGradientXInput: return "gradient_x_input";
    case Method::kIntegratedGradients: return "integrated_gradients";
    case Method::kDeepLift: return "deeplift";
    case Method::kGuidedBackprop: return "guided_backprop";
    case Method::kLime: return "lime";
    case Method::kPartitionShap: return "partition_shap";
    case Method::kShapInteractions: return "shap_interactions";
  }
  return "unknown";
}

std::optional<Method> method_from_name(const std::string& name) {
  for (Method m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

std::string method_names_joined() {
  std::string out;
  for (Method m : kAllMethods) {
    if (!out.empty()) out += ", ";
    out += method_name(m);
  }
  return out;
}

void Attribution::validate() const {
  if (scores.size() != token_texts.size()) {
    fail(ErrorCode::kInvariantViolation, "attribution has " + std::to_string(scores.size()) +
                                             " scores for " + std::to_string(token_texts.size()) +
                                             " tokens");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) fail(ErrorCode::kInvariantViolation, "attribution score is not finite");
  }
}

nlohmann::json to_json(const Attribution& a) {
  return {{"instance_id", a.instance_id}, {"method", method_name(a.method)},
          {"target_class", a.target_class}, {"tokens", a.token_texts},
          {"scores", a.scores}, {"meta", a.meta}};
}

Attribution attribution_from_json(const nlohmann::json& record) {
  Attribution a;
  try {
    a.instance_id = record.at("instance_id").get<std::string>();
    const auto name = record.at("method").get<std::string>();
    const auto method = method_from_name(name);
    if (!method) fail(ErrorCode::kParseError, "unknown method '" + name + "'");
    a.method = *method;
    a.target_class = record.at("target_class").get<int>();
    a.token_texts = record.at("tokens").get<std::vector<std::string>>();
    a.scores = record.at("scores").get<std::vector<double>>();
    a.meta = record.value("meta", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParseError, std::string("attribution record: ") + e.what());
  }
  a.validate();
  return a;
}

}  // namespace attribench
