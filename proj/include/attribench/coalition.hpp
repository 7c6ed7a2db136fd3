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

#ifndef ATTRIBENCH_COALITION_HPP_
#define ATTRIBENCH_COALITION_HPP_

#include <cstdint>
#include <functional>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "attribench/backend.hpp"

namespace attribench::explain {

// present[i] == true when player i is in the coalition.
using Coalition = std::vector<bool>;

// A cooperative game over n players evaluated in batches.
class CoalitionGame {
 public:
  virtual ~CoalitionGame() = default;
  virtual int players() const = 0;
  virtual std::vector<double> values(std::span<const Coalition> coalitions) = 0;

  double value(const Coalition& coalition);
};

// Game defined by a plain function; used for closed-form test games.
class FunctionGame final : public CoalitionGame {
 public:
  FunctionGame(int players, std::function<double(const Coalition&)> fn)
      : players_(players), fn_(std::move(fn)) {}
  int players() const override { return players_; }
  std::vector<double> values(std::span<const Coalition> coalitions) override;

 private:
  int players_;
  std::function<double(const Coalition&)> fn_;
};

enum class MaskingMode { kRemove, kMaskToken };

// v(S) = p(target | tokens outside S masked or removed). Memoizes coalition
// values and counts distinct model evaluations.
class CoalitionValueFn final : public CoalitionGame {
 public:
  // Mode defaults to mask-token replacement when the backend has a mask token.
  CoalitionValueFn(const Backend& backend, const TokenSequence& seq,
                   int target);
  CoalitionValueFn(const Backend& backend, const TokenSequence& seq,
                   int target, MaskingMode mode);

  int players() const override { return static_cast<int>(seq_.size()); }
  std::vector<double> values(std::span<const Coalition> coalitions) override;

  MaskingMode mode() const { return mode_; }
  std::size_t evaluations() const { return evaluations_; }

 private:
  TokenSequence perturbed(const Coalition& coalition) const;

  const Backend& backend_;
  TokenSequence seq_;
  int target_;
  MaskingMode mode_;
  std::unordered_map<std::vector<bool>, double> cache_;
  std::size_t evaluations_ = 0;
};

}  // namespace attribench::explain

#endif  // ATTRIBENCH_COALITION_HPP_
