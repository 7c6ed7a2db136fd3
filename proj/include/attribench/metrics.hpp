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

#ifndef ATTRIBENCH_METRICS_HPP_
#define ATTRIBENCH_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attribench/alignment.hpp"
#include "attribench/attribution.hpp"
#include "attribench/backend.hpp"

namespace attribench::metrics {

enum class Metric {
  kSoftSufficiency,
  kSoftComprehensiveness,
  kFadNauc,
  kAucTp,
  kIouF1,
  kTokenF1,
  kAuprc,
  kComplexity,
  kSparseness,
};

inline constexpr Metric kAllMetrics[] = {
    Metric::kSoftSufficiency, Metric::kSoftComprehensiveness,
    Metric::kFadNauc,         Metric::kAucTp,
    Metric::kIouF1,           Metric::kTokenF1,
    Metric::kAuprc,           Metric::kComplexity,
    Metric::kSparseness,
};

enum class Direction { kLowerBetter, kHigherBetter };
enum class Scope { kInstance, kDataset };

std::string metric_name(Metric metric);
std::optional<Metric> metric_from_name(const std::string& name);
std::string metric_names_joined();
Direction direction_of(Metric metric);
std::string direction_name(Direction direction);
std::string direction_arrow(Direction direction);
std::string scope_name(Scope scope);
// Short definition used in verbalizer prompts and table legends.
std::string metric_definition(Metric metric);
bool is_plausibility(Metric metric);

struct MetricResult {
  Metric metric = Metric::kComplexity;
  double value = 0.0;
  Direction direction = Direction::kLowerBetter;
  Scope scope = Scope::kInstance;
  nlohmann::json meta = nlohmann::json::object();
};

MetricResult make_result(Metric metric, double value, Scope scope,
                         nlohmann::json meta = nlohmann::json::object());

// Per-token retention probabilities: min-max normalized |scores|, with a
// constant vector mapped to 0.5 everywhere.
std::vector<double> normalized_importance(std::span<const double> scores);

// Ranking of indices by descending |score|, ties by lower index.
std::vector<int> rank_by_magnitude(std::span<const double> scores);

struct SoftOptions {
  int samples = 30;
  std::uint64_t seed = 0;
  // Replaces the normalized importance, e.g. all ones or all zeros.
  std::optional<std::vector<double>> importance_override;
};

MetricResult soft_sufficiency(const Backend& backend, const TokenSequence& seq,
                              const Attribution& attribution,
                              const SoftOptions& options = {});
MetricResult soft_comprehensiveness(const Backend& backend,
                                    const TokenSequence& seq,
                                    const Attribution& attribution,
                                    const SoftOptions& options = {});

// Fractions 0, 0.05, ..., 0.5.
std::vector<double> default_fad_fractions();
// Thresholds 0, 0.1, ..., 1.0.
std::vector<double> default_tp_thresholds();

// Number of top tokens affected at fraction f of n tokens.
int tokens_at_fraction(double fraction, std::size_t n);

// One explained instance for the sweep metrics.
struct SweepItem {
  const TokenSequence* seq = nullptr;
  const Attribution* attribution = nullptr;
  std::optional<int> gold_label;
};

// Instance scope: performance is p(original prediction).
MetricResult fad_nauc(const Backend& backend, const TokenSequence& seq,
                      const Attribution& attribution,
                      std::span<const double> fractions);
// Dataset scope: performance is accuracy against gold labels.
MetricResult fad_nauc(const Backend& backend, std::span<const SweepItem> items,
                      std::span<const double> fractions);
MetricResult auc_tp(const Backend& backend, const TokenSequence& seq,
                    const Attribution& attribution,
                    std::span<const double> thresholds);
MetricResult auc_tp(const Backend& backend, std::span<const SweepItem> items,
                    std::span<const double> thresholds);

// Trapezoidal area under (x, y).
double trapezoid(std::span<const double> x, std::span<const double> y);

// Top-k words by |score|, ties by lower index, excluded words skipped.
// k defaults to the number of gold words.
std::vector<int> top_k_rationale(const data::WordScores& scores,
                                 const data::RationaleMask& gold,
                                 std::optional<int> k = std::nullopt);

MetricResult iou_f1(const data::WordScores& scores,
                    const data::RationaleMask& gold,
                    std::optional<int> k = std::nullopt);
MetricResult token_f1(const data::WordScores& scores,
                      const data::RationaleMask& gold,
                      std::optional<int> k = std::nullopt);
MetricResult auprc(const data::WordScores& scores,
                   const data::RationaleMask& gold);

MetricResult complexity(const Attribution& attribution);
MetricResult sparseness(const Attribution& attribution);

nlohmann::json to_json(const MetricResult& result);

}  // namespace attribench::metrics

#endif  // ATTRIBENCH_METRICS_HPP_
