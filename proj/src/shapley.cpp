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

#include <bit>
#include <cmath>
#include <numeric>
#include <cstdint>
#include <map>
#include <queue>
#include <unordered_map>

#include "attribench/errors.hpp"
#include "attribench/explainers.hpp"
#include "attribench/rng.hpp"

namespace attribench::explain {
namespace {

constexpr int kMaxEnumeration = 20;

Coalition coalition_of(std::uint32_t bits, int n) {
  Coalition c(n);
  for (int i = 0; i < n; ++i) c[i] = (bits >> i) & 1U;
  return c;
}

// v over every subset, indexed by bitmask.
std::vector<double> enumerate_game(CoalitionGame& game) {
  const int n = game.players();
  if (n > kMaxEnumeration) {
    fail(ErrorCode::kInvalidArgument, "exact enumeration limited to " + std::to_string(kMaxEnumeration) + " players");
  }
  const std::uint32_t count = 1U << n;
  std::vector<Coalition> all;
  all.reserve(count);
  for (std::uint32_t bits = 0; bits < count; ++bits) all.push_back(coalition_of(bits, n));
  return game.values(all);
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::vector<double> shapley_from_table(const std::vector<double>& v, int n) {
  // |S|! (n - |S| - 1)! / n! = 1 / (n * C(n - 1, |S|))
  std::vector<double> weight(n);
  for (int s = 0; s < n; ++s) weight[s] = 1.0 / (n * binomial(n - 1, s));
  std::vector<double> phi(n, 0.0);
  const std::uint32_t count = 1U << n;
  for (std::uint32_t bits = 0; bits < count; ++bits) {
    const int size = std::popcount(bits);
    for (int i = 0; i < n; ++i) {
      if (bits & (1U << i)) continue;
      phi[i] += weight[size] * (v[bits | (1U << i)] - v[bits]);
    }
  }
  return phi;
}

Matrix sii_from_table(const std::vector<double>& v, int n) {
  Matrix sii = Matrix::Zero(n, n);
  if (n < 2) return sii;
  // |S|! (n - |S| - 2)! / (n - 1)! = 1 / ((n - 1) * C(n - 2, |S|))
  std::vector<double> weight(n - 1);
  for (int s = 0; s <= n - 2; ++s) weight[s] = 1.0 / ((n - 1) * binomial(n - 2, s));
  const std::uint32_t count = 1U << n;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const std::uint32_t bi = 1U << i;
      const std::uint32_t bj = 1U << j;
      double total = 0.0;
      for (std::uint32_t bits = 0; bits < count; ++bits) {
        if (bits & (bi | bj)) continue;
        const double delta = v[bits | bi | bj] - v[bits | bi] - v[bits | bj] + v[bits];
        total += weight[std::popcount(bits)] * delta;
      }
      sii(i, j) = total;
      sii(j, i) = total;
    }
  }
  return sii;
}

// Memoizes game values and enforces the evaluation budget.
class BudgetedGame {
 public:
  BudgetedGame(CoalitionGame& game, int budget) : game_(game), budget_(budget) {}

  int missing(const std::vector<const Coalition*>& coalitions) const {
    int count = 0;
    std::unordered_map<std::vector<bool>, bool> seen;
    for (const auto* c : coalitions) {
      if (!cache_.count(*c) && seen.emplace(*c, true).second) ++count;
    }
    return count;
  }
  bool affordable(const std::vector<const Coalition*>& coalitions) const {
    return used_ + missing(coalitions) <= budget_;
  }
  std::vector<double> values(const std::vector<Coalition>& coalitions) {
    std::vector<Coalition> pending;
    std::unordered_map<std::vector<bool>, bool> queued;
    for (const auto& c : coalitions) {
      if (!cache_.count(c) && queued.emplace(c, true).second) pending.push_back(c);
    }
    if (!pending.empty()) {
      const auto v = game_.values(pending);
      for (std::size_t i = 0; i < pending.size(); ++i) cache_[pending[i]] = v[i];
      used_ += static_cast<int>(pending.size());
    }
    std::vector<double> out;
    for (const auto& c : coalitions) out.push_back(cache_.at(c));
    return out;
  }
  int used() const { return used_; }

 private:
  CoalitionGame& game_;
  int budget_;
  int used_ = 0;
  std::unordered_map<std::vector<bool>, double> cache_;
};

struct TreeNode {
  int begin;
  int end;  // exclusive
  int left = -1;
  int right = -1;
};

int build_tree(std::vector<TreeNode>& nodes, int begin, int end) {
  const int index = static_cast<int>(nodes.size());
  nodes.push_back({begin, end});
  if (end - begin > 1) {
    const int mid = begin + (end - begin) / 2;
    const int left = build_tree(nodes, begin, mid);
    const int right = build_tree(nodes, mid, end);
    nodes[index].left = left;
    nodes[index].right = right;
  }
  return index;
}

Coalition with_span(Coalition c, const TreeNode& node) {
  for (int i = node.begin; i < node.end; ++i) c[i] = true;
  return c;
}

}  // namespace

std::vector<double> exact_shapley(CoalitionGame& game) {
  const int n = game.players();
  if (n < 1) fail(ErrorCode::kEmptyInput, "game has no players");
  return shapley_from_table(enumerate_game(game), n);
}

std::vector<double> partition_shap_game(CoalitionGame& game, const PartitionShapOptions& options) {
  const int n = game.players();
  if (n < 1) fail(ErrorCode::kEmptyInput, "partition_shap needs at least one token");
  if (options.budget < 2 * n) {
    fail(ErrorCode::kBudgetTooSmall, "partition_shap budget " + std::to_string(options.budget) +
                                         " < 2 * n_tokens = " + std::to_string(2 * n));
  }
  if (options.tree == PartitionTree::kFlat) {
    // Every token a direct child of the root: Owen values equal Shapley values.
    if (n > kFlatTreeLimit) {
      fail(ErrorCode::kInvalidArgument, "flat partition tree limited to " + std::to_string(kFlatTreeLimit) + " tokens");
    }
    if (options.budget < (1 << n)) {
      fail(ErrorCode::kBudgetTooSmall, "flat partition tree needs budget >= 2^n = " + std::to_string(1 << n));
    }
    return exact_shapley(game);
  }

  std::vector<TreeNode> nodes;
  build_tree(nodes, 0, n);
  BudgetedGame budgeted(game, options.budget);
  const Coalition empty(n, false);
  const Coalition full(n, true);
  const auto ends = budgeted.values({empty, full});

  // A queue item carries a node evaluated in one context: off = context with
  // the node absent, on = context with the node present. Owen values for a
  // binary hierarchy weight each of the two sibling contexts by 1/2.
  struct Item {
    int node;
    Coalition off;
    double f_off;
    double f_on;
    double weight;
    std::uint64_t order;
  };
  auto priority = [](const Item& a, const Item& b) {
    const double pa = std::abs(a.weight * (a.f_on - a.f_off));
    const double pb = std::abs(b.weight * (b.f_on - b.f_off));
    if (pa != pb) return pa < pb;
    return a.order > b.order;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(priority)> queue(priority);
  std::uint64_t order = 0;
  queue.push({0, empty, ends[0], ends[1], 1.0, order++});

  std::vector<double> phi(n, 0.0);
  auto distribute = [&](const Item& item) {
    const TreeNode& node = nodes[item.node];
    const double share = item.weight * (item.f_on - item.f_off) / (node.end - node.begin);
    for (int i = node.begin; i < node.end; ++i) phi[i] += share;
  };
  while (!queue.empty()) {
    Item item = queue.top();
    queue.pop();
    const TreeNode& node = nodes[item.node];
    if (node.left < 0) {
      distribute(item);
      continue;
    }
    const TreeNode& left = nodes[node.left];
    const TreeNode& right = nodes[node.right];
    const Coalition off_left = with_span(item.off, left);
    const Coalition off_right = with_span(item.off, right);
    if (!budgeted.affordable({&off_left, &off_right})) {
      distribute(item);
      continue;
    }
    const auto v = budgeted.values({off_left, off_right});
    const double half = item.weight / 2.0;
    queue.push({node.left, item.off, item.f_off, v[0], half, order++});
    queue.push({node.left, off_right, v[1], item.f_on, half, order++});
    queue.push({node.right, item.off, item.f_off, v[1], half, order++});
    queue.push({node.right, off_left, v[0], item.f_on, half, order++});
  }
  return phi;
}

InteractionValues shap_interactions_game(CoalitionGame& game, const ShapInteractionOptions& options) {
  const int n = game.players();
  if (n < 2) fail(ErrorCode::kInvalidArgument, "shap_interactions needs at least two tokens");
  InteractionMode mode = options.mode;
  if (mode == InteractionMode::kAuto) {
    mode = n <= kExactInteractionLimit ? InteractionMode::kExact : InteractionMode::kSampling;
  }
  InteractionValues out;
  if (mode == InteractionMode::kExact) {
    if (n > kMaxEnumeration) fail(ErrorCode::kInvalidArgument, "exact interactions limited to 20 tokens");
    if (static_cast<double>(options.budget) < std::ldexp(1.0, n)) {
      fail(ErrorCode::kBudgetTooSmall, "exact interactions need budget >= 2^n");
    }
    const auto v = enumerate_game(game);
    out.main_effects = shapley_from_table(v, n);
    out.pairwise = sii_from_table(v, n);
    return out;
  }

  // Sampling: the coalitions are stratified by size. Small strata are
  // enumerated; the rest share the remaining budget and are sampled
  // uniformly. Every sampled coalition contributes to all pairs and all main
  // effects, and each sampled stratum is centered on a constant whose exact
  // contribution is added back in closed form.
  if (options.budget < 2 * n) {
    fail(ErrorCode::kBudgetTooSmall, "sampled interactions need budget >= 2 * n_tokens");
  }
  auto log_choose = [](int a, int b) {
    return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
  };
  auto choose = [&](int a, int b) { return b < 0 || b > a ? 0.0 : std::exp(log_choose(a, b)); };
  // SII weight of a coalition with s other players; Shapley weight likewise.
  auto pair_weight = [&](int s) {
    if (s < 0 || s > n - 2) return 0.0;
    return std::exp(std::lgamma(s + 1.0) + std::lgamma(n - s - 1.0) - std::lgamma(static_cast<double>(n)));
  };
  auto single_weight = [&](int s) {
    if (s < 0 || s > n - 1) return 0.0;
    return std::exp(std::lgamma(s + 1.0) + std::lgamma(n - s + 0.0) - std::lgamma(n + 1.0));
  };

  struct Stratum {
    int size;
    double count;  // coalitions of this size
    bool exact = false;
    int samples = 0;
  };
  std::vector<Stratum> strata;
  for (int t = 0; t <= n; ++t) strata.push_back({t, choose(n, t)});
  std::vector<int> order(n + 1);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return strata[a].count < strata[b].count; });
  long long remaining = options.budget;
  for (std::size_t k = 0; k < order.size(); ++k) {
    Stratum& st = strata[order[k]];
    const long long share = remaining / static_cast<long long>(order.size() - k);
    if (st.count <= static_cast<double>(share)) {
      st.exact = true;
      remaining -= static_cast<long long>(st.count);
    } else {
      st.samples = static_cast<int>(share);
      remaining -= share;
    }
  }

  Rng rng(options.seed);
  std::vector<Coalition> coalitions;
  std::vector<int> owner;  // stratum of each coalition
  std::vector<int> players(n);
  for (const Stratum& st : strata) {
    if (st.exact) {
      // Enumerate all size-t subsets in lexicographic order.
      std::vector<bool> pick(n, false);
      std::fill(pick.begin(), pick.begin() + st.size, true);
      do {
        coalitions.push_back(pick);
        owner.push_back(st.size);
      } while (std::prev_permutation(pick.begin(), pick.end()));
      continue;
    }
    for (int s = 0; s < st.samples; ++s) {
      std::iota(players.begin(), players.end(), 0);
      Coalition c(n, false);
      for (int i = 0; i < st.size; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(players[i], players[j]);
        c[players[i]] = true;
      }
      coalitions.push_back(std::move(c));
      owner.push_back(st.size);
    }
  }
  const std::vector<double> v = game.values(coalitions);

  double center = 0.0;
  int n_exact = 0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (strata[owner[k]].exact) {
      center += v[k];
      ++n_exact;
    }
  }
  center = n_exact ? center / n_exact : 0.0;

  Matrix sii = Matrix::Zero(n, n);
  std::vector<double> phi(n, 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Stratum& st = strata[owner[k]];
    const int t = st.size;
    const double scale = st.exact ? 1.0 : st.count / st.samples;
    const double value = (st.exact ? v[k] : v[k] - center) * scale;
    const Coalition& c = coalitions[k];
    const double both = pair_weight(t - 2), one = -pair_weight(t - 1), none = pair_weight(t);
    const double in = single_weight(t - 1), out_w = -single_weight(t);
    for (int i = 0; i < n; ++i) {
      phi[i] += value * (c[i] ? in : out_w);
      for (int j = i + 1; j < n; ++j) {
        const int m = static_cast<int>(c[i]) + static_cast<int>(c[j]);
        sii(i, j) += value * (m == 2 ? both : m == 1 ? one : none);
      }
    }
  }
  // Add back the centering constant of every sampled stratum.
  for (const Stratum& st : strata) {
    if (st.exact) continue;
    const int t = st.size;
    const double pair_total = choose(n - 2, t - 2) * pair_weight(t - 2) -
                              2.0 * choose(n - 2, t - 1) * pair_weight(t - 1) +
                              choose(n - 2, t) * pair_weight(t);
    const double single_total = choose(n - 1, t - 1) * single_weight(t - 1) - choose(n - 1, t) * single_weight(t);
    for (int i = 0; i < n; ++i) {
      phi[i] += center * single_total;
      for (int j = i + 1; j < n; ++j) sii(i, j) += center * pair_total;
    }
  }
  out.main_effects = std::move(phi);
  out.pairwise = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) out.pairwise(i, j) = out.pairwise(j, i) = sii(i, j);
  }
  return out;
}

std::vector<double> aggregate_interactions(const InteractionValues& values) {
  const auto n = values.main_effects.size();
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    double pair_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) pair_sum += values.pairwise(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    scores[i] = values.main_effects[i] + 0.5 * pair_sum;
  }
  return scores;
}

Attribution partition_shap(const Backend& backend, const TokenSequence& seq, int target,
                           const PartitionShapOptions& options) {
  CoalitionValueFn game(backend, seq, target);
  Attribution a;
  a.method = Method::kPartitionShap;
  a.target_class = target;
  a.scores = partition_shap_game(game, options);
  a.token_texts = seq.tokens;
  a.meta = {{"seed", options.seed},
            {"budget", options.budget},
            {"tree", options.tree == PartitionTree::kFlat ? "flat" : "balanced"},
            {"evaluations", game.evaluations()}};
  a.validate();
  return a;
}

std::pair<InteractionValues, Attribution> shap_interactions(const Backend& backend,
                                                            const TokenSequence& seq, int target,
                                                            const ShapInteractionOptions& options) {
  CoalitionValueFn game(backend, seq, target);
  InteractionValues values = shap_interactions_game(game, options);
  const bool exact = options.mode == InteractionMode::kExact ||
                     (options.mode == InteractionMode::kAuto && static_cast<int>(seq.size()) <= kExactInteractionLimit);
  Attribution a;
  a.method = Method::kShapInteractions;
  a.target_class = target;
  a.scores = aggregate_interactions(values);
  a.token_texts = seq.tokens;
  a.meta = {{"seed", options.seed},
            {"budget", options.budget},
            {"order", 2},
            {"estimator", exact ? "exact" : "stratified"},
            {"evaluations", game.evaluations()}};
  a.validate();
  return {std::move(values), std::move(a)};
}

}  // namespace attribench::explain
