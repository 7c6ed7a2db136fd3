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
#include "attribench/explainers.hpp"

namespace attribench::explain {

bool supports(const Backend& backend, Method method) {
  const BackendInfo& info = backend.info();
  switch (method) {
    case Method::kSaliency:
    case Method::kGradientXInput:
    case Method::kIntegratedGradients:
      return info.has(Capability::kGradients) && info.has(Capability::kEmbeddings);
    case Method::kDeepLift:
    case Method::kGuidedBackprop:
      return backend.reference_model() != nullptr || info.serves_native(method_name(method));
    case Method::kLime:
    case Method::kPartitionShap:
    case Method::kShapInteractions:
      return true;
  }
  return false;
}

Attribution explain(Method method, const Backend& backend, const TokenSequence& seq, int target,
                    const ExplainOptions& options) {
  switch (method) {
    case Method::kSaliency: return saliency(backend, seq, target);
    case Method::kGradientXInput: return gradient_x_input(backend, seq, target);
    case Method::kIntegratedGradients: return integrated_gradients(backend, seq, target, options.ig);
    case Method::kDeepLift: return deeplift(backend, seq, target, options.baseline);
    case Method::kGuidedBackprop: return guided_backprop(backend, seq, target);
    case Method::kLime: return lime(backend, seq, target, options.lime);
    case Method::kPartitionShap: return partition_shap(backend, seq, target, options.partition);
    case Method::kShapInteractions: return shap_interactions(backend, seq, target, options.interactions).second;
  }
  fail(ErrorCode::kInvalidArgument, "unknown method");
}

}  // namespace attribench::explain
