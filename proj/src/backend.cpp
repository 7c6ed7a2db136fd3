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

#include "attribench/backend.hpp"

#include "attribench/errors.hpp"

namespace attribench {

std::string baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kDefault: return "default";
    case BaselineKind::kZeroEmbeddings: return "zero_embeddings";
    case BaselineKind::kMaskToken: return "mask_token";
  }
  return "default";
}

BaselineKind baseline_from_name(const std::string& name) {
  if (name == "default") return BaselineKind::kDefault;
  if (name == "zero_embeddings") return BaselineKind::kZeroEmbeddings;
  if (name == "mask_token") return BaselineKind::kMaskToken;
  fail(ErrorCode::kInvalidArgument, "unknown baseline '" + name + "'");
}

void Backend::require(Capability c, std::string_view what) const {
  if (!info().has(c)) {
    fail(ErrorCode::kCapabilityMissing,
         std::string(what) + " requires backend capability '" +
             capability_name(c) + "'");
  }
}

EmbeddingMatrix Backend::embed(const TokenSequence&) const {
  fail(ErrorCode::kCapabilityMissing, "backend does not expose embeddings");
}

std::vector<ModelOutput> Backend::predict_embeddings(
    std::span<const EmbeddingMatrix>) const {
  fail(ErrorCode::kCapabilityMissing, "backend does not expose embeddings");
}

Matrix Backend::gradient_wrt_embeddings(const EmbeddingMatrix&, int) const {
  fail(ErrorCode::kCapabilityMissing, "backend does not expose gradients");
}

std::vector<double> Backend::native_attribution(const std::string& method,
                                                const TokenSequence&, int,
                                                BaselineKind) const {
  fail(ErrorCode::kCapabilityMissing,
       "backend does not serve native attribution '" + method + "'");
}

ProbabilityVector Backend::predict_one(const TokenSequence& seq) const {
  return predict(std::span<const TokenSequence>(&seq, 1)).front();
}

ModelOutput Backend::predict_from_embeddings(const EmbeddingMatrix& rows) const {
  return predict_embeddings(std::span<const EmbeddingMatrix>(&rows, 1)).front();
}

std::vector<ProbabilityVector> Backend::predict_allow_empty(
    std::span<const TokenSequence> batch) const {
  const BackendInfo& meta = info();
  std::vector<TokenSequence> inputs;
  std::vector<int> slot(batch.size(), -1);
  inputs.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch[i].empty()) {
      slot[i] = static_cast<int>(inputs.size());
      inputs.push_back(batch[i]);
    } else if (meta.mask_token_id) {
      TokenSequence mask;
      mask.text = meta.mask_token;
      mask.tokens = {meta.mask_token};
      mask.ids = {*meta.mask_token_id};
      mask.word_map = {std::nullopt};
      slot[i] = static_cast<int>(inputs.size());
      inputs.push_back(std::move(mask));
    }
  }
  std::vector<ProbabilityVector> predicted;
  if (!inputs.empty()) predicted = predict(inputs);
  std::vector<ProbabilityVector> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.push_back(slot[i] >= 0 ? predicted[slot[i]]
                               : ProbabilityVector::uniform(meta.n_classes));
  }
  return out;
}

}  // namespace attribench
