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

#ifndef ATTRIBENCH_BACKEND_HPP_
#define ATTRIBENCH_BACKEND_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attribench/types.hpp"

namespace attribench {

class ReferenceClassifier;

// Reference point for path and difference-based attributions.
enum class BaselineKind { kDefault, kZeroEmbeddings, kMaskToken };

std::string baseline_name(BaselineKind kind);
BaselineKind baseline_from_name(const std::string& name);

// The model contract consumed by every explainer and faithfulness metric.
// Implementations must be safe for concurrent const use after construction.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendInfo& info() const = 0;
  virtual TokenSequence tokenize(std::string_view text) const = 0;
  virtual std::vector<ProbabilityVector> predict(
      std::span<const TokenSequence> batch) const = 0;

  // The methods below throw kCapabilityMissing unless overridden.
  virtual EmbeddingMatrix embed(const TokenSequence& seq) const;
  virtual std::vector<ModelOutput> predict_embeddings(
      std::span<const EmbeddingMatrix> batch) const;
  // d logit[target] / d rows.
  virtual Matrix gradient_wrt_embeddings(const EmbeddingMatrix& rows,
                                         int target) const;
  virtual std::vector<double> native_attribution(const std::string& method,
                                                 const TokenSequence& seq,
                                                 int target,
                                                 BaselineKind baseline) const;

  // Non-null when the backend exposes its ReLU internals in-process.
  virtual const ReferenceClassifier* reference_model() const { return nullptr; }

  ProbabilityVector predict_one(const TokenSequence& seq) const;
  ModelOutput predict_from_embeddings(const EmbeddingMatrix& rows) const;

  // Predictions where empty sequences follow the shared convention: a single
  // mask token when the backend has one, otherwise the uniform distribution.
  std::vector<ProbabilityVector> predict_allow_empty(
      std::span<const TokenSequence> batch) const;

  void require(Capability c, std::string_view what) const;
};

}  // namespace attribench

#endif  // ATTRIBENCH_BACKEND_HPP_
