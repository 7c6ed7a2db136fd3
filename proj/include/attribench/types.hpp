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

#ifndef ATTRIBENCH_TYPES_HPP_
#define ATTRIBENCH_TYPES_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace attribench {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Tokenized text. word_map[i] is the index of the whitespace word token i came
// from, or nullopt for special tokens.
struct TokenSequence {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<std::int64_t> ids;
  std::vector<std::optional<int>> word_map;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }

  // Throws kInvariantViolation when the parallel arrays disagree or the word
  // map decreases.
  void validate() const;

  // Tokens with keep[i] == false dropped; text is rebuilt from the tokens.
  TokenSequence subsequence(const std::vector<bool>& keep) const;
  // Same positions, ids of masked tokens replaced.
  TokenSequence with_replaced(const std::vector<bool>& replace,
                              std::int64_t id, const std::string& token) const;
};

struct ProbabilityVector {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }
  // Lowest index among maxima.
  int argmax() const;

  static ProbabilityVector uniform(int n_classes);
};

// Rows are token embeddings in the model's embedding space.
using EmbeddingMatrix = Matrix;

// One forward pass evaluated from embeddings.
struct ModelOutput {
  ProbabilityVector probs;
  std::vector<double> logits;
};

enum class Capability { kGradients, kEmbeddings, kNativeAttribution };

struct BackendInfo {
  int n_classes = 0;
  std::vector<std::string> label_names;
  std::optional<std::int64_t> mask_token_id;
  std::string mask_token = "[MASK]";
  std::vector<Capability> capabilities;
  // Methods served through native_attribution, e.g. "deeplift".
  std::vector<std::string> native_methods;
  std::optional<int> max_length;
  int embed_dim = 0;

  bool has(Capability c) const;
  bool serves_native(const std::string& method) const;
};

std::string capability_name(Capability c);
std::optional<Capability> capability_from_name(const std::string& name);

}  // namespace attribench

#endif  // ATTRIBENCH_TYPES_HPP_
