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

#include <cmath>
#include <numeric>

#include "attribench/errors.hpp"
#include "attribench/explainers.hpp"
#include "attribench/rng.hpp"

namespace attribench::explain {

LimeFit weighted_ridge(const std::vector<Coalition>& masks, const std::vector<double>& targets,
                       const std::vector<double>& weights, double lambda) {
  if (masks.empty() || masks.size() != targets.size() || masks.size() != weights.size()) {
    fail(ErrorCode::kInvalidArgument, "weighted_ridge needs equally sized, non-empty inputs");
  }
  const auto n = static_cast<Eigen::Index>(masks.front().size());
  // Columns: intercept, then one per player. The intercept is not penalized.
  Matrix gram = Matrix::Zero(n + 1, n + 1);
  Vector rhs = Vector::Zero(n + 1);
  Vector row(n + 1);
  for (std::size_t s = 0; s < masks.size(); ++s) {
    row(0) = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) row(j + 1) = masks[s][j] ? 1.0 : 0.0;
    gram.noalias() += weights[s] * row * row.transpose();
    rhs.noalias() += weights[s] * targets[s] * row;
  }
  for (Eigen::Index j = 1; j <= n; ++j) gram(j, j) += lambda;
  Eigen::LDLT<Matrix> solver(gram);
  const Vector pivots = solver.vectorD();
  const bool singular = pivots.minCoeff() <= 1e-12 * pivots.cwiseAbs().maxCoeff();
  if (solver.info() != Eigen::Success || !solver.isPositive() || singular || solver.rcond() < 1e-13) {
    fail(ErrorCode::kDegenerateDesign,
         "weighted design matrix is singular; increase n_samples or ridge_lambda");
  }
  const Vector beta = solver.solve(rhs);
  LimeFit fit;
  fit.intercept = beta(0);
  fit.coefficients.assign(beta.data() + 1, beta.data() + beta.size());
  return fit;
}

LimeFit lime_game(CoalitionGame& game, const LimeOptions& options) {
  const int n = game.players();
  if (n < 1) fail(ErrorCode::kEmptyInput, "lime needs at least one token");
  if (options.n_samples < n + 2) {
    fail(ErrorCode::kDegenerateDesign, "lime needs n_samples >= n_tokens + 2 (got " +
                                           std::to_string(options.n_samples) + " for " +
                                           std::to_string(n) + " tokens)");
  }
  if (options.kernel_sigma <= 0.0) fail(ErrorCode::kInvalidArgument, "kernel_sigma must be positive");
  Rng rng(options.seed);
  std::vector<Coalition> masks;
  std::vector<double> weights;
  masks.reserve(options.n_samples);
  weights.reserve(options.n_samples);
  std::vector<int> order(n);
  for (int s = 0; s < options.n_samples; ++s) {
    // Deactivate k ~ Uniform{1..n} tokens chosen uniformly.
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    std::iota(order.begin(), order.end(), 0);
    Coalition z(n, true);
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
      std::swap(order[i], order[j]);
      z[order[i]] = false;
    }
    const double distance = static_cast<double>(k) / n;  // 1 - |z| / n
    weights.push_back(std::exp(-distance * distance / (options.kernel_sigma * options.kernel_sigma)));
    masks.push_back(std::move(z));
  }
  const std::vector<double> targets = game.values(masks);
  return weighted_ridge(masks, targets, weights, options.ridge_lambda);
}

Attribution lime(const Backend& backend, const TokenSequence& seq, int target,
                 const LimeOptions& options) {
  CoalitionValueFn game(backend, seq, target);
  const LimeFit fit = lime_game(game, options);
  Attribution a;
  a.method = Method::kLime;
  a.target_class = target;
  a.scores = fit.coefficients;
  a.token_texts = seq.tokens;
  a.meta = {{"seed", options.seed},
            {"samples", options.n_samples},
            {"kernel_sigma", options.kernel_sigma},
            {"ridge_lambda", options.ridge_lambda},
            {"intercept", fit.intercept},
            {"masking", game.mode() == MaskingMode::kRemove ? "remove" : "mask_token"}};
  a.validate();
  return a;
}

}  // namespace attribench::explain
