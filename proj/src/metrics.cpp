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

#include "attribench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attribench/errors.hpp"
#include "attribench/rng.hpp"

namespace attribench::metrics {
namespace {

void check_aligned(const TokenSequence& seq, const Attribution& attribution) {
  if (attribution.scores.size() != seq.size()) {
    fail(ErrorCode::kAlignmentError, "attribution has " + std::to_string(attribution.scores.size()) +
                                         " scores for " + std::to_string(seq.size()) + " tokens");
  }
}

void check_grid(std::span<const double> grid, const char* what) {
  if (grid.size() < 2) fail(ErrorCode::kInvalidArgument, std::string(what) + " needs at least two points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.0 || grid[i] > 1.0 || (i > 0 && grid[i] <= grid[i - 1])) {
      fail(ErrorCode::kInvalidArgument, std::string(what) + " must be increasing within [0, 1]");
    }
  }
}

// Soft perturbation shared by both soft metrics. Row i is kept when
// u_i < keep_prob(q_i); dropped rows are zeroed.
template <typename KeepProb>
MetricResult soft_metric(Metric metric, const Backend& backend, const TokenSequence& seq,
                         const Attribution& attribution, const SoftOptions& options,
                         KeepProb keep_prob) {
  backend.require(Capability::kEmbeddings, metric_name(metric));
  check_aligned(seq, attribution);
  if (options.samples < 1) fail(ErrorCode::kInvalidArgument, "soft metrics need samples >= 1");
  const std::vector<double> q = options.importance_override
                                    ? *options.importance_override
                                    : normalized_importance(attribution.scores);
  if (q.size() != seq.size()) fail(ErrorCode::kAlignmentError, "importance override length != token count");

  const EmbeddingMatrix rows = backend.embed(seq);
  const ModelOutput original = backend.predict_from_embeddings(rows);
  const int predicted = original.probs.argmax();
  const double p_original = original.probs[predicted];

  Rng rng(options.seed);
  std::vector<EmbeddingMatrix> perturbed;
  perturbed.reserve(options.samples);
  for (int s = 0; s < options.samples; ++s) {
    EmbeddingMatrix x = rows;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (!(rng.uniform() < keep_prob(q[i]))) x.row(i).setZero();
    }
    perturbed.push_back(std::move(x));
  }
  const auto outputs = backend.predict_embeddings(perturbed);
  double total = 0.0;
  for (const auto& out : outputs) total += std::max(0.0, p_original - out.probs[predicted]);
  return make_result(metric, total / options.samples, Scope::kInstance,
                     {{"samples", options.samples}, {"seed", options.seed}, {"predicted_class", predicted}});
}

std::vector<bool> keep_all_but_top(const std::vector<int>& ranking, int k) {
  std::vector<bool> keep(ranking.size(), true);
  for (int r = 0; r < k; ++r) keep[ranking[r]] = false;
  return keep;
}

double normalized_auc(std::span<const double> fractions, const std::vector<double>& perf) {
  const double span = fractions.back() - fractions.front();
  if (perf.front() <= 0.0) return 0.0;
  return trapezoid(fractions, perf) / (perf.front() * span);
}

// Performance curves. Each returns one value per grid point: the predicted
// class probability (instance) or accuracy against gold (dataset).
std::vector<ProbabilityVector> deletion_predictions(const Backend& backend, const TokenSequence& seq,
                                                    const Attribution& attribution,
                                                    std::span<const double> fractions) {
  const auto ranking = rank_by_magnitude(attribution.scores);
  std::vector<TokenSequence> inputs;
  for (double f : fractions) {
    inputs.push_back(seq.subsequence(keep_all_but_top(ranking, tokens_at_fraction(f, seq.size()))));
  }
  return backend.predict_allow_empty(inputs);
}

std::vector<ProbabilityVector> masking_predictions(const Backend& backend, const TokenSequence& seq,
                                                   const Attribution& attribution,
                                                   std::span<const double> thresholds) {
  const auto ranking = rank_by_magnitude(attribution.scores);
  const BackendInfo& info = backend.info();
  if (info.mask_token_id) {
    std::vector<TokenSequence> inputs;
    for (double t : thresholds) {
      auto keep = keep_all_but_top(ranking, tokens_at_fraction(t, seq.size()));
      keep.flip();
      inputs.push_back(seq.with_replaced(keep, *info.mask_token_id, info.mask_token));
    }
    return backend.predict(inputs);
  }
  if (!info.has(Capability::kEmbeddings)) {
    fail(ErrorCode::kCapabilityMissing, "auc_tp needs a mask token or embeddings");
  }
  const EmbeddingMatrix rows = backend.embed(seq);
  std::vector<EmbeddingMatrix> inputs;
  for (double t : thresholds) {
    EmbeddingMatrix x = rows;
    const int k = tokens_at_fraction(t, seq.size());
    for (int r = 0; r < k; ++r) x.row(ranking[r]).setZero();
    inputs.push_back(std::move(x));
  }
  std::vector<ProbabilityVector> out;
  for (auto& o : backend.predict_embeddings(inputs)) out.push_back(std::move(o.probs));
  return out;
}

template <typename Curve>
std::vector<double> instance_curve(const Backend& backend, const TokenSequence& seq,
                                   const Attribution& attribution, std::span<const double> grid,
                                   Curve curve) {
  check_aligned(seq, attribution);
  const int predicted = backend.predict_one(seq).argmax();
  std::vector<double> perf;
  for (const auto& p : curve(backend, seq, attribution, grid)) perf.push_back(p[predicted]);
  return perf;
}

template <typename Curve>
std::vector<double> dataset_curve(const Backend& backend, std::span<const SweepItem> items,
                                  std::span<const double> grid, Curve curve) {
  if (items.empty()) fail(ErrorCode::kEmptyDataset, "sweep metric over an empty dataset");
  std::vector<double> correct(grid.size(), 0.0);
  for (const auto& item : items) {
    if (!item.gold_label) fail(ErrorCode::kMissingGoldLabels, "dataset-scope sweep needs gold labels");
    check_aligned(*item.seq, *item.attribution);
    const auto predictions = curve(backend, *item.seq, *item.attribution, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (predictions[g].argmax() == *item.gold_label) correct[g] += 1.0;
    }
  }
  for (double& c : correct) c /= static_cast<double>(items.size());
  return correct;
}

nlohmann::json curve_meta(std::span<const double> grid, const std::vector<double>& perf) {
  return {{"grid", std::vector<double>(grid.begin(), grid.end())}, {"curve", perf}};
}

std::vector<std::pair<int, int>> spans_of(const std::vector<int>& flags) {
  std::vector<std::pair<int, int>> spans;
  const int n = static_cast<int>(flags.size());
  for (int i = 0; i < n;) {
    if (!flags[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j < n && flags[j]) ++j;
    spans.emplace_back(i, j);
    i = j;
  }
  return spans;
}

double span_iou(std::pair<int, int> a, std::pair<int, int> b) {
  const int inter = std::max(0, std::min(a.second, b.second) - std::max(a.first, b.first));
  const int uni = (a.second - a.first) + (b.second - b.first) - inter;
  return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

double f1(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

void check_plausibility_inputs(const data::WordScores& scores, const data::RationaleMask& gold) {
  if (scores.values.size() != gold.size()) {
    fail(ErrorCode::kAlignmentError, "word scores (" + std::to_string(scores.values.size()) +
                                         ") and rationale (" + std::to_string(gold.size()) +
                                         ") differ in length");
  }
  if (gold.positives() == 0) fail(ErrorCode::kMissingRationale, "gold rationale has no positive words");
}

std::vector<int> selected_flags(const data::WordScores& scores, const data::RationaleMask& gold,
                                std::optional<int> k) {
  std::vector<int> flags(gold.size(), 0);
  for (int i : top_k_rationale(scores, gold, k)) flags[i] = 1;
  return flags;
}

std::vector<double> absolute(std::span<const double> scores) {
  std::vector<double> a(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) a[i] = std::abs(scores[i]);
  return a;
}

}  // namespace

std::string metric_name(Metric metric) {
  switch (metric) {
    case Metric::kSoftSufficiency: return "soft_suff";
    case Metric::kSoftComprehensiveness: return "soft_comp";
    case Metric::kFadNauc: return "fad_nauc";
    case Metric::kAucTp: return "auc_tp";
    case Metric::kIouF1: return "iou_f1";
    case Metric::kTokenF1: return "token_f1";
    case Metric::kAuprc: return "auprc";
    case Metric::kComplexity: return "complexity";
    case Metric::kSparseness: return "sparseness";
  }
  return "unknown";
}

std::optional<Metric> metric_from_name(const std::string& name) {
  for (Metric m : kAllMetrics) {
    if (metric_name(m) == name) return m;
  }
  return std::nullopt;
}

std::string metric_names_joined() {
  std::string out;
  for (Metric m : kAllMetrics) {
    if (!out.empty()) out += ", ";
    out += metric_name(m);
  }
  return out;
}

Direction direction_of(Metric metric) {
  switch (metric) {
    case Metric::kSoftSufficiency:
    case Metric::kFadNauc:
    case Metric::kAucTp:
    case Metric::kComplexity:
      return Direction::kLowerBetter;
    case Metric::kSoftComprehensiveness:
    case Metric::kIouF1:
    case Metric::kTokenF1:
    case Metric::kAuprc:
    case Metric::kSparseness:
      return Direction::kHigherBetter;
  }
  return Direction::kHigherBetter;
}

std::string direction_name(Direction direction) {
  return direction == Direction::kLowerBetter ? "lower_better" : "higher_better";
}

std::string direction_arrow(Direction direction) {
  return direction == Direction::kLowerBetter ? "↓" : "↑";
}

std::string scope_name(Scope scope) { return scope == Scope::kInstance ? "instance" : "dataset"; }

std::string metric_definition(Metric metric) {
  switch (metric) {
    case Metric::kSoftSufficiency:
      return "mean drop in the predicted-class probability when tokens are kept with probability "
             "equal to their normalized importance and the rest are zeroed";
    case Metric::kSoftComprehensiveness:
      return "mean drop in the predicted-class probability when important tokens are zeroed "
             "with probability equal to their normalized importance";
    case Metric::kFadNauc:
      return "normalized area under the performance curve as the most important tokens are deleted";
    case Metric::kAucTp:
      return "area under the performance curve as the most important tokens are masked at "
             "increasing thresholds";
    case Metric::kIouF1:
      return "F1 over rationale spans, counting a span as matched when its overlap (IoU) with a "
             "human span is at least 0.5";
    case Metric::kTokenF1:
      return "F1 between the top-ranked words and the human rationale words";
    case Metric::kAuprc:
      return "area under the precision-recall curve of word importance against the human rationale";
    case Metric::kComplexity:
      return "Shannon entropy of the normalized absolute importance scores";
    case Metric::kSparseness:
      return "Gini index of the absolute importance scores";
  }
  return "";
}

bool is_plausibility(Metric metric) {
  return metric == Metric::kIouF1 || metric == Metric::kTokenF1 || metric == Metric::kAuprc;
}

MetricResult make_result(Metric metric, double value, Scope scope, nlohmann::json meta) {
  return {metric, value, direction_of(metric), scope, std::move(meta)};
}

std::vector<double> normalized_importance(std::span<const double> scores) {
  const std::vector<double> a = absolute(scores);
  if (a.empty()) return a;
  const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
  const double min = *lo;
  const double range = *hi - *lo;
  std::vector<double> q(a.size(), 0.5);
  if (range > 0.0) {
    for (std::size_t i = 0; i < a.size(); ++i) q[i] = (a[i] - min) / range;
  }
  return q;
}

std::vector<int> rank_by_magnitude(std::span<const double> scores) {
  const std::vector<double> a = absolute(scores);
  std::vector<int> order(a.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&a](int x, int y) { return a[x] > a[y]; });
  return order;
}

MetricResult soft_sufficiency(const Backend& backend, const TokenSequence& seq,
                              const Attribution& attribution, const SoftOptions& options) {
  return soft_metric(Metric::kSoftSufficiency, backend, seq, attribution, options,
                     [](double q) { return q; });
}

MetricResult soft_comprehensiveness(const Backend& backend, const TokenSequence& seq,
                                    const Attribution& attribution, const SoftOptions& options) {
  return soft_metric(Metric::kSoftComprehensiveness, backend, seq, attribution, options,
                     [](double q) { return 1.0 - q; });
}

std::vector<double> default_fad_fractions() {
  std::vector<double> f;
  for (int i = 0; i <= 10; ++i) f.push_back(i / 20.0);
  return f;
}

std::vector<double> default_tp_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 10; ++i) t.push_back(i / 10.0);
  return t;
}

int tokens_at_fraction(double fraction, std::size_t n) {
  // The epsilon keeps grid values such as 0.05 * 20 from rounding up.
  const double k = std::ceil(fraction * static_cast<double>(n) - 1e-9);
  return static_cast<int>(std::clamp(k, 0.0, static_cast<double>(n)));
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) area += (x[i] - x[i - 1]) * (y[i] + y[i - 1]) / 2.0;
  return area;
}

MetricResult fad_nauc(const Backend& backend, const TokenSequence& seq, const Attribution& attribution,
                      std::span<const double> fractions) {
  check_grid(fractions, "fad fractions");
  const auto perf = instance_curve(backend, seq, attribution, fractions, deletion_predictions);
  return make_result(Metric::kFadNauc, normalized_auc(fractions, perf), Scope::kInstance,
                     curve_meta(fractions, perf));
}

MetricResult fad_nauc(const Backend& backend, std::span<const SweepItem> items,
                      std::span<const double> fractions) {
  check_grid(fractions, "fad fractions");
  const auto perf = dataset_curve(backend, items, fractions, deletion_predictions);
  auto meta = curve_meta(fractions, perf);
  if (perf.front() <= 0.0) meta["degenerate"] = true;
  return make_result(Metric::kFadNauc, normalized_auc(fractions, perf), Scope::kDataset, std::move(meta));
}

MetricResult auc_tp(const Backend& backend, const TokenSequence& seq, const Attribution& attribution,
                    std::span<const double> thresholds) {
  check_grid(thresholds, "auc_tp thresholds");
  const auto perf = instance_curve(backend, seq, attribution, thresholds, masking_predictions);
  return make_result(Metric::kAucTp, trapezoid(thresholds, perf), Scope::kInstance,
                     curve_meta(thresholds, perf));
}

MetricResult auc_tp(const Backend& backend, std::span<const SweepItem> items,
                    std::span<const double> thresholds) {
  check_grid(thresholds, "auc_tp thresholds");
  const auto perf = dataset_curve(backend, items, thresholds, masking_predictions);
  return make_result(Metric::kAucTp, trapezoid(thresholds, perf), Scope::kDataset,
                     curve_meta(thresholds, perf));
}

std::vector<int> top_k_rationale(const data::WordScores& scores, const data::RationaleMask& gold,
                                 std::optional<int> k) {
  const int want = k.value_or(gold.positives());
  std::vector<int> candidates;
  for (std::size_t i = 0; i < scores.values.size(); ++i) {
    if (i >= gold.excluded.size() || !gold.excluded[i]) candidates.push_back(static_cast<int>(i));
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&scores](int a, int b) {
    return std::abs(scores.values[a]) > std::abs(scores.values[b]);
  });
  candidates.resize(std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(std::max(want, 0))));
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

MetricResult iou_f1(const data::WordScores& scores, const data::RationaleMask& gold, std::optional<int> k) {
  check_plausibility_inputs(scores, gold);
  const auto predicted = spans_of(selected_flags(scores, gold, k));
  const auto truth = spans_of(gold.flags);
  auto matched = [](const auto& from, const auto& against) {
    int hits = 0;
    for (const auto& a : from) {
      double best = 0.0;
      for (const auto& b : against) best = std::max(best, span_iou(a, b));
      if (best >= 0.5) ++hits;
    }
    return hits;
  };
  const double precision = predicted.empty() ? 0.0 : static_cast<double>(matched(predicted, truth)) / predicted.size();
  const double recall = static_cast<double>(matched(truth, predicted)) / truth.size();
  return make_result(Metric::kIouF1, f1(precision, recall), Scope::kInstance,
                     {{"precision", precision}, {"recall", recall},
                      {"k", k.value_or(gold.positives())}});
}

MetricResult token_f1(const data::WordScores& scores, const data::RationaleMask& gold, std::optional<int> k) {
  check_plausibility_inputs(scores, gold);
  const auto predicted = selected_flags(scores, gold, k);
  int tp = 0;
  int selected = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    selected += predicted[i];
    tp += predicted[i] && gold.flags[i];
  }
  const double precision = selected > 0 ? static_cast<double>(tp) / selected : 0.0;
  const double recall = static_cast<double>(tp) / gold.positives();
  return make_result(Metric::kTokenF1, f1(precision, recall), Scope::kInstance,
                     {{"precision", precision}, {"recall", recall},
                      {"k", k.value_or(gold.positives())}});
}

MetricResult auprc(const data::WordScores& scores, const data::RationaleMask& gold) {
  check_plausibility_inputs(scores, gold);
  std::vector<int> order;
  for (std::size_t i = 0; i < scores.values.size(); ++i) {
    if (i >= gold.excluded.size() || !gold.excluded[i]) order.push_back(static_cast<int>(i));
  }
  std::stable_sort(order.begin(), order.end(), [&scores](int a, int b) {
    return std::abs(scores.values[a]) > std::abs(scores.values[b]);
  });
  int positives = 0;
  for (int i : order) positives += gold.flags[i];
  // One cut point per distinct |score|; tied words enter together.
  double ap = 0.0;
  double last_recall = 0.0;
  int tp = 0;
  int seen = 0;
  for (std::size_t r = 0; r < order.size();) {
    const double level = std::abs(scores.values[order[r]]);
    while (r < order.size() && std::abs(scores.values[order[r]]) == level) {
      tp += gold.flags[order[r]];
      ++seen;
      ++r;
    }
    const double recall = static_cast<double>(tp) / positives;
    const double precision = static_cast<double>(tp) / seen;
    ap += (recall - last_recall) * precision;
    last_recall = recall;
  }
  return make_result(Metric::kAuprc, ap, Scope::kInstance);
}

MetricResult complexity(const Attribution& attribution) {
  const auto a = absolute(attribution.scores);
  const double total = std::accumulate(a.begin(), a.end(), 0.0);
  if (!(total > 0.0)) fail(ErrorCode::kAllZeroScores, "complexity of an all-zero attribution");
  double entropy = 0.0;
  for (double x : a) {
    if (x > 0.0) {
      const double p = x / total;
      entropy -= p * std::log(p);
    }
  }
  return make_result(Metric::kComplexity, entropy, Scope::kInstance);
}

MetricResult sparseness(const Attribution& attribution) {
  auto a = absolute(attribution.scores);
  const double total = std::accumulate(a.begin(), a.end(), 0.0);
  if (!(total > 0.0)) fail(ErrorCode::kAllZeroScores, "sparseness of an all-zero attribution");
  std::sort(a.begin(), a.end());
  const auto n = static_cast<double>(a.size());
  double weighted = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) weighted += (2.0 * (k + 1) - n - 1.0) * a[k];
  return make_result(Metric::kSparseness, weighted / (n * total), Scope::kInstance);
}

nlohmann::json to_json(const MetricResult& result) {
  return {{"metric", metric_name(result.metric)},
          {"value", result.value},
          {"direction", direction_name(result.direction)},
          {"scope", scope_name(result.scope)},
          {"meta", result.meta}};
}

}  // namespace attribench::metrics
