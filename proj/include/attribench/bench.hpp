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

#ifndef ATTRIBENCH_BENCH_HPP_
#define ATTRIBENCH_BENCH_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attribench/aggregate.hpp"
#include "attribench/attribution.hpp"
#include "attribench/backend.hpp"
#include "attribench/datasets.hpp"
#include "attribench/explainers.hpp"
#include "attribench/metrics.hpp"

// Explain, evaluate and aggregate over a dataset from one config, and render
// the results.
namespace attribench::bench {

std::string version();

struct BackendSpec {
  enum class Kind { kReference, kRemote };
  Kind kind = Kind::kReference;
  // Reference model: trained on the benchmark dataset when fit_epochs > 0.
  std::uint64_t seed = 0;
  int fit_epochs = 200;
  double fit_lr = 0.1;
  bool mask_token = true;
  int vocab_size = 4096;
  int embed_dim = 16;
  int hidden_dim = 32;
  // Remote model: exactly one of these.
  std::string command;
  std::string endpoint;
};

enum class TargetPolicy { kPredicted, kGold };

struct BenchmarkConfig {
  BackendSpec backend;
  std::filesystem::path dataset;
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  std::vector<metrics::Metric> metrics{std::begin(metrics::kAllMetrics), std::end(metrics::kAllMetrics)};
  explain::ExplainOptions explain;
  int soft_samples = 30;
  std::vector<double> fad_fractions = metrics::default_fad_fractions();
  std::vector<double> tp_thresholds = metrics::default_tp_thresholds();
  std::optional<int> plausibility_k;
  TargetPolicy target = TargetPolicy::kPredicted;
  // Dataset scope scores the sweeps by accuracy over all instances; instance
  // scope scores each instance by the probability of its prediction.
  metrics::Scope sweep_scope = metrics::Scope::kDataset;
  int max_instances = 0;  // 0 keeps every instance
  std::uint64_t seed = 0;
  // Run settings that never change results, so they stay out of the report.
  int workers = 1;
  std::filesystem::path output_dir = "attribench-out";
  bool heatmaps = true;
};

// Unknown keys and names raise kConfigError. A relative dataset path resolves
// against base_dir, normally the config file's directory; output_dir stays
// relative to the working directory.
BenchmarkConfig config_from_json(const nlohmann::json& json,
                                 const std::filesystem::path& base_dir = {});
BenchmarkConfig load_config(const std::filesystem::path& path);
// Result-relevant fields only (no output_dir, workers or heatmaps).
nlohmann::json to_json(const BenchmarkConfig& config);

std::unique_ptr<Backend> make_backend(const BackendSpec& spec, const data::Dataset& dataset);

// Throws kConfigError naming every method or metric the backend cannot run.
void validate_capabilities(const Backend& backend, const BenchmarkConfig& config);

struct InstanceRecord {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  int label = 0;
  int predicted = 0;
  int target = 0;
  std::vector<double> probs;
};

// One explain or metric failure, kept instead of aborting the run.
struct Failure {
  std::string instance_id;  // empty for dataset-scope metrics
  Method method = Method::kSaliency;
  std::optional<metrics::Metric> metric;  // unset when explaining failed
  std::string code;
  std::string message;
};

struct MetricRecord {
  std::string instance_id;  // empty for dataset scope
  Method method = Method::kSaliency;
  metrics::MetricResult result;
};

struct BenchmarkReport {
  nlohmann::json config;
  nlohmann::json dataset;
  nlohmann::json backend;
  std::vector<InstanceRecord> instances;
  std::vector<Attribution> attributions;  // instance order, then method order
  std::vector<MetricRecord> results;
  std::vector<Failure> failures;
  metrics::MetricTable table;
  // Seconds per stage; written to timings.json, not to the report.
  nlohmann::json timings;
};

// Deterministic given the config: per-instance seeds do not depend on the
// worker count or scheduling.
BenchmarkReport run_benchmark(const BenchmarkConfig& config, const Backend& backend,
                              const data::Dataset& dataset);
// Loads the dataset, builds the backend and runs.
BenchmarkReport run_benchmark(const BenchmarkConfig& config);

nlohmann::json to_json(const BenchmarkReport& report);
// report.json, table.csv, attributions.jsonl, timings.json and, when
// enabled, heatmaps/<index>_<id>.html.
void write_outputs(const BenchmarkReport& report, const std::filesystem::path& dir,
                   bool heatmaps = true);

// Self-contained HTML: one row per attribution, tokens colored by signed
// score divided by the row's max |score| (red positive, blue negative).
// kAlignmentError when an attribution's tokens differ from `tokens`.
std::string render_heatmap_html(const std::string& title, const std::vector<std::string>& tokens,
                                const std::vector<Attribution>& attributions);
// Background color for a normalized score in [-1, 1].
std::string heat_color(double normalized);

enum class TableFormat { kText, kCsv, kJson };
TableFormat table_format_from_name(const std::string& name);
// Best cells are marked: '*' in text, a parallel <metric>_best column in CSV,
// and "best" fields in JSON.
std::string render_table(const metrics::MetricTable& table, TableFormat format);

}  // namespace attribench::bench

#endif  // ATTRIBENCH_BENCH_HPP_
