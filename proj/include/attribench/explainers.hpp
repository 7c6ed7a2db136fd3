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

#ifndef ATTRIBENCH_EXPLAINERS_HPP_
#define ATTRIBENCH_EXPLAINERS_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include "attribench/attribution.hpp"
#include "attribench/backend.hpp"
#include "attribench/coalition.hpp"

namespace attribench::explain {

// Order-2 Shapley interaction indices.
struct InteractionValues {
  int order = 2;
  std::vector<double> main_effects;
  Matrix pairwise;  // symmetric, zero diagonal
};

struct IntegratedGradientsOptions {
  int steps = 64;
  BaselineKind baseline = BaselineKind::kDefault;
};

struct LimeOptions {
  int n_samples = 1000;
  double kernel_sigma = 0.25;
  double ridge_lambda = 1.0;
  std::uint64_t seed = 0;
};

enum class PartitionTree { kBalanced, kFlat };

struct PartitionShapOptions {
  int budget = 512;
  PartitionTree tree = PartitionTree::kBalanced;
  std::uint64_t seed = 0;
};

enum class InteractionMode { kAuto, kExact, kSampling };

struct ShapInteractionOptions {
  int budget = 2048;
  InteractionMode mode = InteractionMode::kAuto;
  std::uint64_t seed = 0;
};

// Largest token count explained by exact enumeration in kAuto mode.
inline constexpr int kExactInteractionLimit = 10;
inline constexpr int kFlatTreeLimit = 12;

// Baseline embeddings resolved from kind: mask-token rows when the backend
// has a mask token, zero rows otherwise.
EmbeddingMatrix baseline_embeddings(const Backend& backend,
                                    const TokenSequence& seq,
                                    BaselineKind kind);

Attribution saliency(const Backend& backend, const TokenSequence& seq,
                     int target);
Attribution gradient_x_input(const Backend& backend, const TokenSequence& seq,
                             int target);
Attribution integrated_gradients(const Backend& backend,
                                 const TokenSequence& seq, int target,
                                 const IntegratedGradientsOptions& options = {});
Attribution deeplift(const Backend& backend, const TokenSequence& seq,
                     int target, BaselineKind baseline = BaselineKind::kDefault);
Attribution guided_backprop(const Backend& backend, const TokenSequence& seq,
                            int target);
Attribution lime(const Backend& backend, const TokenSequence& seq, int target,
                 const LimeOptions& options = {});
Attribution partition_shap(const Backend& backend, const TokenSequence& seq,
                           int target,
                           const PartitionShapOptions& options = {});
std::pair<InteractionValues, Attribution> shap_interactions(
    const Backend& backend, const TokenSequence& seq, int target,
    const ShapInteractionOptions& options = {});

// Game-level cores, shared by the backend wrappers above and usable on any
// CoalitionGame.

// Weighted ridge fit of v(z) on binary masks; coefficients only.
struct LimeFit {
  double intercept = 0.0;
  std::vector<double> coefficients;
};
LimeFit lime_game(CoalitionGame& game, const LimeOptions& options);
LimeFit weighted_ridge(const std::vector<Coalition>& masks,
                       const std::vector<double>& targets,
                       const std::vector<double>& weights, double lambda);

// Exact Shapley values by subset enumeration (n <= 20).
std::vector<double> exact_shapley(CoalitionGame& game);
std::vector<double> partition_shap_game(CoalitionGame& game,
                                        const PartitionShapOptions& options);
InteractionValues shap_interactions_game(CoalitionGame& game,
                                         const ShapInteractionOptions& options);
// phi_i + 1/2 * sum_j SII(i, j)
std::vector<double> aggregate_interactions(const InteractionValues& values);

// Dispatch by method with the options bundle used by the benchmark runner.
struct ExplainOptions {
  IntegratedGradientsOptions ig;
  BaselineKind baseline = BaselineKind::kDefault;
  LimeOptions lime;
  PartitionShapOptions partition;
  ShapInteractionOptions interactions;
};
Attribution explain(Method method, const Backend& backend,
                    const TokenSequence& seq, int target,
                    const ExplainOptions& options);

// Capability check used before any model call.
bool supports(const Backend& backend, Method method);

}  // namespace attribench::explain

#endif  // ATTRIBENCH_EXPLAINERS_HPP_
