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

#ifndef ATTRIBENCH_REFERENCE_MODEL_HPP_
#define ATTRIBENCH_REFERENCE_MODEL_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "attribench/backend.hpp"
#include "attribench/types.hpp"

namespace attribench {

namespace data {
struct Dataset;
}

struct ReferenceConfig {
  int vocab_size = 4096;
  int embed_dim = 16;
  int hidden_dim = 32;
  int n_classes = 2;
  std::vector<std::string> label_names;  // defaults to "0".."C-1"
  std::uint64_t seed = 0;
  // Reserves id 0 as "[MASK]"; other tokens hash into [1, vocab_size).
  bool with_mask_token = false;
};

struct ReferenceParams {
  Matrix embedding;  // V x d
  Matrix w1;         // d x h
  Vector b1;         // h
  Matrix w2;         // h x C
  Vector b2;         // C
};

// Intermediate values of one forward pass, kept for layerwise attribution.
struct ReferenceActivations {
  Vector pooled;      // d
  Vector hidden_pre;  // h, before ReLU
  Vector hidden;      // h
  Vector logits;      // C
};

// Lowercases, splits on whitespace and trims leading/trailing punctuation
// from each word. One token per whitespace word, so word_map is the identity.
TokenSequence reference_tokenize(std::string_view text, int vocab_size,
                                 bool with_mask_token);

// embed -> mean-pool -> affine -> ReLU -> affine -> softmax.
class ReferenceClassifier final : public Backend {
 public:
  // Seeded Gaussian initialization.
  explicit ReferenceClassifier(ReferenceConfig config);
  // Hand-built parameters; shapes must agree with config.
  ReferenceClassifier(ReferenceConfig config, ReferenceParams params);

  const BackendInfo& info() const override { return info_; }
  TokenSequence tokenize(std::string_view text) const override;
  std::vector<ProbabilityVector> predict(
      std::span<const TokenSequence> batch) const override;
  EmbeddingMatrix embed(const TokenSequence& seq) const override;
  std::vector<ModelOutput> predict_embeddings(
      std::span<const EmbeddingMatrix> batch) const override;
  Matrix gradient_wrt_embeddings(const EmbeddingMatrix& rows,
                                 int target) const override;
  const ReferenceClassifier* reference_model() const override { return this; }

  ReferenceActivations forward(const EmbeddingMatrix& rows) const;

  const ReferenceConfig& config() const { return config_; }
  const ReferenceParams& params() const { return params_; }
  ReferenceParams& mutable_params() { return params_; }

 private:
  void check_rows(const EmbeddingMatrix& rows) const;

  ReferenceConfig config_;
  ReferenceParams params_;
  BackendInfo info_;
};

ReferenceParams init_reference_params(const ReferenceConfig& config);

// Mean cross-entropy of the model on the dataset.
double reference_loss(const ReferenceClassifier& model,
                      const data::Dataset& dataset);

// Full-batch gradient descent on mean cross-entropy over all parameters.
ReferenceClassifier fit_reference(const data::Dataset& dataset, int epochs,
                                  double lr, std::uint64_t seed,
                                  ReferenceConfig base = {});

}  // namespace attribench

#endif  // ATTRIBENCH_REFERENCE_MODEL_HPP_
