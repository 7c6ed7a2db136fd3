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

#ifndef ATTRIBENCH_TESTS_SUPPORT_TEST_MODELS_HPP_
#define ATTRIBENCH_TESTS_SUPPORT_TEST_MODELS_HPP_

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "attribench/attribution.hpp"
#include "attribench/backend.hpp"
#include "attribench/reference_model.hpp"
#include "attribench/rng.hpp"

namespace attribench::testing {

// Reference model with Gaussian weights and non-zero biases, so ReLUs are
// mixed active/inactive.
ReferenceClassifier random_reference(std::uint64_t seed, int n_classes = 3,
                                     bool with_mask_token = false);

// Sequence of n random in-vocabulary ids (never the mask id).
TokenSequence random_sequence(const ReferenceClassifier& model, Rng& rng, int n);

// logit[target] = w . mean(e_i) exactly: W1 = I, b1 = shift (keeps every ReLU
// active), W2 = [w, -w], b2 cancels the shift.
ReferenceClassifier linear_reference(const Vector& w, std::uint64_t seed,
                                     bool with_mask_token = false);

// Model whose prediction is decided by one keyword token: class 1 iff the
// keyword is present. Other tokens have no effect on the logits.
struct PlantedKeyword {
  ReferenceClassifier model;
  std::string keyword;
  std::int64_t keyword_id;
};
PlantedKeyword planted_keyword_model();

struct PlantedInstance {
  TokenSequence seq;
  int keyword_position;
};
// n instances of 5..12 tokens, each containing the keyword once.
std::vector<PlantedInstance> planted_instances(const PlantedKeyword& planted, int n,
                                               std::uint64_t seed);

// All mass on the keyword, or on every other token.
Attribution oracle_attribution(const PlantedInstance& instance);
Attribution inverted_attribution(const PlantedInstance& instance);

// Central finite-difference gradient of logit[target] w.r.t. rows.
// Wraps a reference model behind the plain Backend interface: internals are
// hidden, capabilities can be withheld and native methods can be served.
class ProxyBackend : public Backend {
 public:
  ProxyBackend(const ReferenceClassifier& inner, std::vector<Capability> capabilities,
               std::vector<std::string> native_methods = {});

  const BackendInfo& info() const override { return info_; }
  TokenSequence tokenize(std::string_view text) const override;
  std::vector<ProbabilityVector> predict(std::span<const TokenSequence> batch) const override;
  EmbeddingMatrix embed(const TokenSequence& seq) const override;
  std::vector<ModelOutput> predict_embeddings(std::span<const EmbeddingMatrix> batch) const override;
  Matrix gradient_wrt_embeddings(const EmbeddingMatrix& rows, int target) const override;
  std::vector<double> native_attribution(const std::string& method, const TokenSequence& seq,
                                         int target, BaselineKind baseline) const override;

  int predict_calls() const { return predict_calls_; }

 private:
  const ReferenceClassifier& inner_;
  BackendInfo info_;
  mutable std::atomic<int> predict_calls_{0};
};

Matrix finite_difference_gradient(const Backend& backend, const EmbeddingMatrix& rows,
                                  int target, double step);

}  // namespace attribench::testing

#endif  // ATTRIBENCH_TESTS_SUPPORT_TEST_MODELS_HPP_
