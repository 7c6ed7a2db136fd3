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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attribench/errors.hpp"
#include "attribench/explainers.hpp"
#include "attribench/reference_model.hpp"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_models.hpp"

namespace attribench::explain {
namespace {

Coalition coalition_of(unsigned mask, int n) {
  Coalition c(n);
  for (int i = 0; i < n; ++i) c[i] = (mask >> i) & 1u;
  return c;
}

// Shapley values by averaging marginal contributions over all n! orderings.
std::vector<double> permutation_shapley(const std::function<double(unsigned)>& v, int n) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(n, 0.0);
  double count = 0;
  do {
    unsigned s = 0;
    for (int p : order) {
      phi[p] += v(s | (1u << p)) - v(s);
      s |= 1u << p;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& x : phi) x /= count;
  return phi;
}

// Pairwise interaction index straight from its subset-sum definition.
double sii_oracle(const std::function<double(unsigned)>& v, int n, int i, int j) {
  double total = 0;
  auto fact = [](int k) { return std::tgamma(k + 1.0); };
  for (unsigned s = 0; s < (1u << n); ++s) {
    if (s & ((1u << i) | (1u << j))) continue;
    const int size = std::popcount(s);
    const double w = fact(size) * fact(n - size - 2) / fact(n - 1);
    total += w * (v(s | (1u << i) | (1u << j)) - v(s | (1u << i)) - v(s | (1u << j)) + v(s));
  }
  return total;
}

std::vector<double> random_table(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> table(1u << n);
  for (double& x : table) x = rng.normal();
  return table;
}

FunctionGame table_game(int n, const std::vector<double>& table) {
  return FunctionGame(n, [n, &table](const Coalition& c) {
    unsigned mask = 0;
    for (int i = 0; i < n; ++i) mask |= c[i] ? 1u << i : 0u;
    return table[mask];
  });
}

TEST(CoalitionValueFn, FullCoalitionIsTargetProbability) {
  const ReferenceClassifier model = testing::random_reference(4);
  const TokenSequence seq = model.tokenize("one two three");
  CoalitionValueFn game(model, seq, 2);
  EXPECT_EQ(game.mode(), MaskingMode::kRemove);
  EXPECT_DOUBLE_EQ(game.value(Coalition(3, true)), model.predict_one(seq)[2]);
  EXPECT_DOUBLE_EQ(game.value(coalition_of(0b101, 3)),
                   model.predict_one(model.tokenize("one three"))[2]);
  // Empty coalition on a model without a mask token predicts uniform.
  EXPECT_NEAR(game.value(Coalition(3, false)), 1.0 / 3.0, 1e-15);
}

TEST(CoalitionValueFn, MaskModeKeepsPositions) {
  const ReferenceClassifier model = testing::random_reference(4, 3, /*with_mask_token=*/true);
  const TokenSequence seq = model.tokenize("one two three");
  CoalitionValueFn game(model, seq, 0);
  EXPECT_EQ(game.mode(), MaskingMode::kMaskToken);
  const auto masked = seq.with_replaced({false, true, false}, 0, "[MASK]");
  EXPECT_DOUBLE_EQ(game.value(coalition_of(0b101, 3)), model.predict_one(masked)[0]);
}

TEST(CoalitionValueFn, RepeatedCoalitionsEvaluatedOnce) {
  const ReferenceClassifier model = testing::random_reference(4);
  const testing::ProxyBackend proxy(model, {});
  CoalitionValueFn game(proxy, model.tokenize("a b c d"), 0);
  const std::vector<Coalition> batch = {coalition_of(1, 4), coalition_of(3, 4), coalition_of(1, 4)};
  const auto first = game.values(batch);
  const auto second = game.values(batch);
  EXPECT_EQ(first, second);
  EXPECT_EQ(first[0], first[2]);
  EXPECT_EQ(game.evaluations(), 2u);
}

TEST(WeightedRidge, RecoversExactlyLinearTarget) {
  const std::vector<double> w = {0.4, -1.5, 2.25, 0.0, -0.125, 0.8};
  const double c = 0.3;
  FunctionGame game(6, [&](const Coalition& z) {
    double v = c;
    for (int j = 0; j < 6; ++j) v += z[j] ? w[j] : 0.0;
    return v;
  });
  const LimeFit fit = lime_game(game, {.n_samples = 1000, .ridge_lambda = 1e-6, .seed = 7});
  for (int j = 0; j < 6; ++j) EXPECT_NEAR(fit.coefficients[j], w[j], 1e-6);
  EXPECT_NEAR(fit.intercept, c, 1e-6);
}

TEST(WeightedRidge, SingularDesign) {
  // Every sample keeps player 0 and player 1 together: columns are collinear.
  std::vector<Coalition> masks = {{true, true}, {false, false}, {true, true}, {false, false}};
  try {
    weighted_ridge(masks, {1, 0, 1, 0}, {1, 1, 1, 1}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateDesign);
  }
}

TEST(Lime, TooFewSamples) {
  const ReferenceClassifier model = testing::random_reference(4);
  try {
    lime(model, model.tokenize("a b c d e"), 0, {.n_samples = 6});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateDesign);
  }
}

TEST(Lime, IgnoredTokenScoresNearZero) {
  // Small weights keep the target probability close to linear in the mask.
  Vector w(4);
  w << 0.75, -1.0, 0.25, 0.5;
  ReferenceClassifier model = testing::linear_reference(w, 3, /*with_mask_token=*/true);
  const TokenSequence seq = model.tokenize("strong signal ignored here also");
  model.mutable_params().embedding.row(seq.ids[2]).setZero();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Attribution a = lime(model, seq, 0, {.n_samples = 2000, .seed = seed});
    EXPECT_LE(std::abs(a.scores[2]), 0.02) << "seed " << seed;
    for (int i : {0, 1, 3, 4}) EXPECT_GT(std::abs(a.scores[i]), 0.1);
  }
}

TEST(Lime, DeterministicGivenSeed) {
  const ReferenceClassifier model = testing::random_reference(8);
  const TokenSequence seq = model.tokenize("the same seed gives the same scores");
  const Attribution a = lime(model, seq, 1, {.n_samples = 300, .seed = 11});
  const Attribution b = lime(model, seq, 1, {.n_samples = 300, .seed = 11});
  const Attribution c = lime(model, seq, 1, {.n_samples = 300, .seed = 12});
  EXPECT_EQ(a.scores, b.scores);
  EXPECT_NE(a.scores, c.scores);
}

TEST(PartitionShap, SingleToken) {
  FunctionGame game(1, [](const Coalition& c) { return c[0] ? 0.9 : 0.2; });
  const auto phi = partition_shap_game(game, {.budget = 2});
  ASSERT_EQ(phi.size(), 1u);
  EXPECT_DOUBLE_EQ(phi[0], 0.9 - 0.2);
}

TEST(PartitionShap, SymmetricTwoTokenGame) {
  FunctionGame game(2, [](const Coalition& c) { return std::pow(1.7, c[0] + c[1]); });
  for (auto tree : {PartitionTree::kBalanced, PartitionTree::kFlat}) {
    const auto phi = partition_shap_game(game, {.budget = 8, .tree = tree});
    EXPECT_NEAR(phi[0], phi[1], 1e-12);
  }
}

TEST(PartitionShap, FlatTreeMatchesBruteForce) {
  const int n = 8;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto table = random_table(n, seed);
    FunctionGame game = table_game(n, table);
    const auto phi = partition_shap_game(game, {.budget = 256, .tree = PartitionTree::kFlat});
    const auto expected = permutation_shapley([&](unsigned s) { return table[s]; }, n);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(phi[i], expected[i], 1e-6);
  }
}

TEST(PartitionShap, FlatTreeOnModelMatchesBruteForce) {
  const ReferenceClassifier model = testing::random_reference(21);
  Rng rng(21);
  const TokenSequence seq = testing::random_sequence(model, rng, 8);
  const Attribution a = partition_shap(model, seq, 1, {.budget = 256, .tree = PartitionTree::kFlat});
  CoalitionValueFn game(model, seq, 1);
  const auto expected = permutation_shapley([&](unsigned s) { return game.value(coalition_of(s, 8)); }, 8);
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(a.scores[i], expected[i], 1e-6);
}

TEST(PartitionShap, BalancedTreeIsEfficient) {
  for (int n : {3, 5, 8, 13}) {
    const auto table = random_table(n, 100 + n);
    FunctionGame game = table_game(n, table);
    const auto phi = partition_shap_game(game, {.budget = 1 << 14});
    const double total = std::accumulate(phi.begin(), phi.end(), 0.0);
    EXPECT_NEAR(total, table.back() - table.front(), 1e-9) << "n " << n;
  }
}

TEST(PartitionShap, AdditiveGameRecoveredOnBalancedTree) {
  const std::vector<double> w = {1, -2, 3, 0.5, -0.25, 4, 0, 2};
  FunctionGame game(8, [&](const Coalition& c) {
    double v = 0;
    for (int i = 0; i < 8; ++i) v += c[i] ? w[i] : 0.0;
    return v;
  });
  const auto phi = partition_shap_game(game, {.budget = 512});
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(phi[i], w[i], 1e-12);
}

TEST(PartitionShap, SmallBudgetStillEfficient) {
  const auto table = random_table(10, 5);
  FunctionGame game = table_game(10, table);
  const auto phi = partition_shap_game(game, {.budget = 20});
  EXPECT_NEAR(std::accumulate(phi.begin(), phi.end(), 0.0), table.back() - table.front(), 1e-9);
}

TEST(PartitionShap, BudgetTooSmall) {
  const auto table = random_table(4, 5);
  FunctionGame game = table_game(4, table);
  try {
    partition_shap_game(game, {.budget = 7});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBudgetTooSmall);
  }
  EXPECT_THROW(partition_shap_game(game, {.budget = 15, .tree = PartitionTree::kFlat}), Error);
}

TEST(ShapInteractions, AdditiveGameHasNoInteractions) {
  const std::vector<double> w = {0.5, -1, 2, 3, -0.5};
  FunctionGame game(5, [&](const Coalition& c) {
    double v = 0;
    for (int i = 0; i < 5; ++i) v += c[i] ? w[i] : 0.0;
    return v;
  });
  const InteractionValues iv = shap_interactions_game(game, {.budget = 32, .mode = InteractionMode::kExact});
  EXPECT_LE(iv.pairwise.cwiseAbs().maxCoeff(), 1e-6);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(iv.main_effects[i], w[i], 1e-12);
}

TEST(ShapInteractions, AndGame) {
  // Players 1 and 2 of four: v(S) = 1 iff both are present.
  FunctionGame game(4, [](const Coalition& c) { return c[1] && c[2] ? 1.0 : 0.0; });
  const InteractionValues iv = shap_interactions_game(game, {.budget = 16});
  EXPECT_NEAR(iv.pairwise(1, 2), 1.0, 1e-12);
  EXPECT_NEAR(iv.main_effects[1], 0.5, 1e-12);
  EXPECT_NEAR(iv.main_effects[2], 0.5, 1e-12);
  EXPECT_NEAR(iv.main_effects[0], 0.0, 1e-12);
  const auto scores = aggregate_interactions(iv);
  EXPECT_NEAR(scores[1], 1.0, 1e-12);
  EXPECT_NEAR(scores[0], 0.0, 1e-12);
}

TEST(ShapInteractions, ExactMatchesDefinition) {
  const int n = 5;
  const auto table = random_table(n, 9);
  FunctionGame game = table_game(n, table);
  const InteractionValues iv = shap_interactions_game(game, {.budget = 32});
  const auto v = [&](unsigned s) { return table[s]; };
  const auto phi = permutation_shapley(v, n);
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(iv.main_effects[i], phi[i], 1e-9);
    EXPECT_EQ(iv.pairwise(i, i), 0.0);
    for (int j = 0; j < n; ++j) {
      EXPECT_EQ(iv.pairwise(i, j), iv.pairwise(j, i));
      if (i != j) EXPECT_NEAR(iv.pairwise(i, j), sii_oracle(v, n, i, j), 1e-9);
    }
  }
}

TEST(ShapInteractions, SamplingApproximatesExact) {
  const int n = 6;
  const auto table = random_table(n, 31);
  FunctionGame exact_game = table_game(n, table);
  FunctionGame sampled_game = table_game(n, table);
  const InteractionValues exact = shap_interactions_game(exact_game, {.budget = 64});
  const InteractionValues sampled =
      shap_interactions_game(sampled_game, {.budget = 20000, .mode = InteractionMode::kSampling, .seed = 3});
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) EXPECT_NEAR(sampled.pairwise(i, j), exact.pairwise(i, j), 0.05);
}

TEST(ShapInteractions, SampledStrataStayClose) {
  // Twelve players and half as many queries as coalitions: the middle strata
  // are sampled.
  const ReferenceClassifier model = testing::random_reference(40, 2);
  Rng rng(40);
  const TokenSequence seq = testing::random_sequence(model, rng, 12);
  CoalitionValueFn exact_game(model, seq, 0);
  const InteractionValues exact = shap_interactions_game(exact_game, {.budget = 4096});
  const double range = exact.pairwise.cwiseAbs().maxCoeff();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CoalitionValueFn sampled_game(model, seq, 0);
    const InteractionValues sampled =
        shap_interactions_game(sampled_game, {.budget = 2048, .mode = InteractionMode::kSampling, .seed = seed});
    EXPECT_LE(sampled_game.evaluations(), 2048u);
    double worst = 0;
    for (int i = 0; i < 12; ++i) {
      worst = std::max(worst, std::abs(sampled.main_effects[i] - exact.main_effects[i]));
      for (int j = i + 1; j < 12; ++j) worst = std::max(worst, std::abs(sampled.pairwise(i, j) - exact.pairwise(i, j)));
    }
    EXPECT_LE(worst, 0.25 * range) << "seed " << seed;
  }
}

TEST(ShapInteractions, SamplingDeterministic) {
  const auto table = random_table(12, 2);
  FunctionGame a_game = table_game(12, table);
  FunctionGame b_game = table_game(12, table);
  const auto a = shap_interactions_game(a_game, {.budget = 500, .seed = 4});
  const auto b = shap_interactions_game(b_game, {.budget = 500, .seed = 4});
  EXPECT_EQ(a.pairwise, b.pairwise);
  EXPECT_EQ(a.main_effects, b.main_effects);
}

TEST(ShapInteractions, BudgetTooSmall) {
  const auto table = random_table(6, 2);
  FunctionGame game = table_game(6, table);
  try {
    shap_interactions_game(game, {.budget = 63, .mode = InteractionMode::kExact});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBudgetTooSmall);
  }
  EXPECT_THROW(shap_interactions_game(game, {.budget = 11, .mode = InteractionMode::kSampling}), Error);
}

TEST(ShapInteractions, AttributionAggregatesPairs) {
  const ReferenceClassifier model = testing::random_reference(14);
  const TokenSequence seq = model.tokenize("four tokens right here");
  const auto [iv, attribution] = shap_interactions(model, seq, 0, {.budget = 16});
  EXPECT_EQ(attribution.scores, aggregate_interactions(iv));
  EXPECT_EQ(attribution.method, Method::kShapInteractions);
}

}  // namespace
}  // namespace attribench::explain
