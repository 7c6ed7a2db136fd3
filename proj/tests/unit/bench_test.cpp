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

#include "attribench/bench.hpp"

#include <filesystem>
#include <fstream>
#include <regex>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "attribench/errors.hpp"
#include "attribench/protocol.hpp"
#include "test_models.hpp"

namespace attribench::testing {
namespace {

using metrics::Metric;
using nlohmann::json;
using ::testing::HasSubstr;

namespace fs = std::filesystem;

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an attribench::Error";
  return ErrorCode::kInternal;
}

std::string fixture(const std::string& name) { return std::string(ATTRIBENCH_FIXTURES) + "/" + name; }

int count(const std::string& haystack, const std::string& needle) {
  int n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

// Cheap sampling settings so the suite stays fast.
bench::BenchmarkConfig small_config(std::vector<Method> methods) {
  bench::BenchmarkConfig c = bench::config_from_json(
      {{"dataset", fixture("movies_mini.jsonl")},
       {"backend", {{"type", "reference"}, {"seed", 7}, {"fit", {{"epochs", 100}, {"lr", 0.1}}}}},
       {"sampling", {{"lime_samples", 64}, {"shap_budget", 64}, {"ig_steps", 16}, {"soft_samples", 8}}},
       {"seed", 5}});
  c.methods = std::move(methods);
  return c;
}

Attribution attribution_for(const std::vector<std::string>& tokens, std::vector<double> scores, Method m) {
  Attribution a;
  a.instance_id = "x";
  a.method = m;
  a.token_texts = tokens;
  a.scores = std::move(scores);
  return a;
}

metrics::MetricTable two_by_two(double saliency_value, double lime_value, Metric metric) {
  std::vector<metrics::CellRecord> records = {
      {Method::kSaliency, metric, metrics::make_result(metric, saliency_value, metrics::Scope::kInstance), false},
      {Method::kLime, metric, metrics::make_result(metric, lime_value, metrics::Scope::kInstance), false}};
  return metrics::aggregate(records, {Method::kSaliency, Method::kLime}, {metric});
}

// ---------------------------------------------------------------------------
// Config

TEST(BenchConfig, DefaultsCoverEveryMethodAndMetric) {
  const auto c = bench::config_from_json(json::object());
  EXPECT_EQ(c.methods.size(), 8u);
  EXPECT_EQ(c.metrics.size(), 9u);
  EXPECT_EQ(c.workers, 1);
  EXPECT_EQ(c.backend.kind, bench::BackendSpec::Kind::kReference);
}

TEST(BenchConfig, RejectsUnknownKeysAndNames) {
  EXPECT_EQ(code_of([] { bench::config_from_json({{"sead", 1}}); }), ErrorCode::kConfigError);
  EXPECT_EQ(code_of([] { bench::config_from_json({{"sampling", {{"lime_sample", 3}}}}); }), ErrorCode::kConfigError);
  EXPECT_EQ(code_of([] { bench::config_from_json({{"metrics", {"accuracy"}}}); }), ErrorCode::kConfigError);
  try {
    bench::config_from_json({{"methods", {"occlusion"}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError);
    EXPECT_THAT(e.what(), HasSubstr("saliency"));
    EXPECT_THAT(e.what(), HasSubstr("shap_interactions"));
  }
  EXPECT_EQ(code_of([] { bench::config_from_json({{"backend", {{"type", "remote"}}}}); }), ErrorCode::kConfigError);
  EXPECT_EQ(code_of([] { bench::config_from_json({{"workers", 0}}); }), ErrorCode::kConfigError);
  EXPECT_EQ(code_of([] { bench::config_from_json({{"seed", "seven"}}); }), ErrorCode::kConfigError);
}

TEST(BenchConfig, DatasetPathIsRelativeToTheConfigFile) {
  const fs::path dir = fs::temp_directory_path() / "attribench_bench_config_test";
  fs::create_directories(dir / "sub");
  std::ofstream(dir / "sub" / "run.json") << R"({"dataset": "data/set.jsonl", "output_dir": "out"})";
  const auto c = bench::load_config(dir / "sub" / "run.json");
  EXPECT_EQ(c.dataset, dir / "sub" / "data" / "set.jsonl");
  EXPECT_EQ(c.output_dir, fs::path("out"));
  fs::remove_all(dir);
}

TEST(BenchConfig, EchoLeavesOutRunSettings) {
  auto c = bench::config_from_json({{"workers", 4}, {"output_dir", "/tmp/x"}, {"dataset", "/a/b/set.jsonl"}});
  const json echo = bench::to_json(c);
  EXPECT_FALSE(echo.contains("workers"));
  EXPECT_FALSE(echo.contains("output_dir"));
  EXPECT_EQ(echo["dataset"], "set.jsonl");
  const auto again = bench::config_from_json(echo);
  EXPECT_EQ(bench::to_json(again), echo);
}

// ---------------------------------------------------------------------------
// Runs

TEST(RunBenchmark, TwoMethodsAllMetricsStructure) {
  const auto report = bench::run_benchmark(small_config({Method::kSaliency, Method::kLime}));
  EXPECT_EQ(report.instances.size(), 8u);
  EXPECT_EQ(report.attributions.size(), 16u);
  EXPECT_EQ(report.table.methods.size(), 2u);
  EXPECT_EQ(report.table.metrics.size(), 9u);
  EXPECT_EQ(report.table.cells.size(), 18u);
  for (const auto& [key, cell] : report.table.cells) {
    EXPECT_TRUE(cell.value.has_value()) << method_name(key.first) << " " << metrics::metric_name(key.second);
  }
  // Instance metrics give 8 values per cell; the sweeps give one dataset value.
  EXPECT_EQ(report.table.at(Method::kLime, Metric::kComplexity).count, 8);
  EXPECT_EQ(report.table.at(Method::kLime, Metric::kFadNauc).count, 1);
  EXPECT_THAT(report.failures, ::testing::IsEmpty());
  const json j = bench::to_json(report);
  EXPECT_EQ(j["tool"]["name"], "attribench");
  EXPECT_EQ(j["results"].size(), 2u * (8u * 7u + 2u));
  EXPECT_FALSE(j.dump().find("timings\":{") != std::string::npos);
}

TEST(RunBenchmark, SameConfigTwiceIsByteIdentical) {
  const auto config = small_config({Method::kLime, Method::kPartitionShap});
  const std::string first = bench::to_json(bench::run_benchmark(config)).dump();
  const std::string second = bench::to_json(bench::run_benchmark(config)).dump();
  EXPECT_EQ(first, second);
}

TEST(RunBenchmark, WorkerCountDoesNotChangeTheReport) {
  auto config = small_config({Method::kSaliency, Method::kLime, Method::kShapInteractions});
  const std::string one = bench::to_json(bench::run_benchmark(config)).dump();
  config.workers = 3;
  const std::string three = bench::to_json(bench::run_benchmark(config)).dump();
  EXPECT_EQ(one, three);
}

TEST(RunBenchmark, SeedChangesSampledMethods) {
  auto config = small_config({Method::kLime});
  const auto a = bench::run_benchmark(config);
  config.seed = 6;
  const auto b = bench::run_benchmark(config);
  EXPECT_NE(a.attributions[0].scores, b.attributions[0].scores);
}

TEST(RunBenchmark, UnsupportedMethodFailsBeforeAnyModelCall) {
  const auto model = random_reference(3, 2, true);
  const ProxyBackend gradients_only(model, {Capability::kGradients});
  protocol::RemoteBackend remote(std::make_unique<protocol::LoopbackTransport>(gradients_only));
  const auto dataset = data::load_canonical(fixture("movies_mini.jsonl"));
  auto config = small_config({Method::kSaliency, Method::kDeepLift});
  try {
    bench::run_benchmark(config, remote, dataset);
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError);
    EXPECT_THAT(e.what(), HasSubstr("deeplift"));
    EXPECT_THAT(e.what(), HasSubstr("soft_suff"));
  }
  EXPECT_EQ(remote.requests(), 1);  // the info handshake only
  EXPECT_EQ(gradients_only.predict_calls(), 0);
}

// Fails gradient calls on 5-token inputs, so gradient methods lose exactly
// the instances of that length.
class FlakyGradients final : public Backend {
 public:
  explicit FlakyGradients(const ReferenceClassifier& inner) : inner_(inner) {}
  const BackendInfo& info() const override { return inner_.info(); }
  TokenSequence tokenize(std::string_view text) const override { return inner_.tokenize(text); }
  std::vector<ProbabilityVector> predict(std::span<const TokenSequence> batch) const override {
    return inner_.predict(batch);
  }
  EmbeddingMatrix embed(const TokenSequence& seq) const override { return inner_.embed(seq); }
  std::vector<ModelOutput> predict_embeddings(std::span<const EmbeddingMatrix> batch) const override {
    return inner_.predict_embeddings(batch);
  }
  Matrix gradient_wrt_embeddings(const EmbeddingMatrix& rows, int target) const override {
    if (rows.rows() == 5) fail(ErrorCode::kBackendUnavailable, "gradient service hiccup");
    return inner_.gradient_wrt_embeddings(rows, target);
  }

 private:
  const ReferenceClassifier& inner_;
};

TEST(RunBenchmark, FailuresAreIsolatedPerCell) {
  const auto dataset = data::load_canonical(fixture("movies_mini.jsonl"));
  int five_token = 0;
  for (const auto& inst : dataset.instances) five_token += inst.words().size() == 5 ? 1 : 0;
  ASSERT_GT(five_token, 0);
  const auto model = fit_reference(dataset, 50, 0.1, 1, ReferenceConfig{.with_mask_token = true});
  const FlakyGradients flaky(model);
  const auto report = bench::run_benchmark(small_config({Method::kSaliency, Method::kLime}), flaky, dataset);
  const auto& cell = report.table.at(Method::kSaliency, Metric::kComplexity);
  EXPECT_EQ(cell.count, 8 - five_token);
  EXPECT_EQ(cell.errors, five_token);
  EXPECT_EQ(report.table.at(Method::kSaliency, Metric::kFadNauc).errors, five_token);
  EXPECT_TRUE(report.table.at(Method::kSaliency, Metric::kFadNauc).value.has_value());
  EXPECT_EQ(report.table.at(Method::kLime, Metric::kComplexity).count, 8);
  EXPECT_EQ(report.table.at(Method::kLime, Metric::kComplexity).errors, 0);
  ASSERT_EQ(static_cast<int>(report.failures.size()), five_token);
  EXPECT_EQ(report.failures[0].code, "BACKEND_UNAVAILABLE");
  EXPECT_FALSE(report.failures[0].metric.has_value());
}

TEST(RunBenchmark, MissingRationaleIsRecordedNotFatal) {
  auto config = small_config({Method::kSaliency});
  config.dataset = fixture("hatexplain_mini.jsonl");
  config.metrics = {Metric::kTokenF1, Metric::kComplexity};
  const auto report = bench::run_benchmark(config);
  const auto& cell = report.table.at(Method::kSaliency, Metric::kTokenF1);
  EXPECT_EQ(cell.count, 12);
  EXPECT_EQ(cell.errors, 12);
  EXPECT_EQ(report.table.at(Method::kSaliency, Metric::kComplexity).count, 24);
}

TEST(RunBenchmark, PairInputsRunEndToEnd) {
  auto config = small_config({Method::kGradientXInput, Method::kPartitionShap});
  config.dataset = fixture("esnli_mini.jsonl");
  config.metrics = {Metric::kAuprc, Metric::kSoftComprehensiveness};
  const auto report = bench::run_benchmark(config);
  EXPECT_EQ(report.instances.size(), 12u);
  EXPECT_EQ(report.table.at(Method::kPartitionShap, Metric::kAuprc).count, 12);
}

TEST(RunBenchmark, WritesEveryArtifact) {
  const fs::path dir = fs::temp_directory_path() / "attribench_bench_outputs_test";
  fs::remove_all(dir);
  const auto report = bench::run_benchmark(small_config({Method::kSaliency, Method::kLime}));
  bench::write_outputs(report, dir);
  for (const char* name : {"report.json", "table.csv", "attributions.jsonl", "timings.json"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  int pages = 0;
  for (const auto& entry : fs::directory_iterator(dir / "heatmaps")) pages += entry.path().extension() == ".html";
  EXPECT_EQ(pages, 8);
  std::ifstream jsonl(dir / "attributions.jsonl");
  int lines = 0;
  for (std::string line; std::getline(jsonl, line);) {
    attribution_from_json(json::parse(line));
    ++lines;
  }
  EXPECT_EQ(lines, 16);
  std::ifstream saved(dir / "report.json");
  const json reloaded = json::parse(saved);
  EXPECT_EQ(bench::render_table(metrics::table_from_json(reloaded["table"]), bench::TableFormat::kCsv),
            bench::render_table(report.table, bench::TableFormat::kCsv));
  std::ifstream timings(dir / "timings.json");
  EXPECT_TRUE(json::parse(timings).contains("total"));
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Heatmaps

TEST(Heatmap, ScaleEndpoints) {
  EXPECT_EQ(bench::heat_color(-1.0), "rgb(0,0,255)");
  EXPECT_EQ(bench::heat_color(0.0), "rgb(255,255,255)");
  EXPECT_EQ(bench::heat_color(1.0), "rgb(255,0,0)");
  const std::vector<std::string> tokens = {"bad", "plain", "good"};
  const std::string html =
      bench::render_heatmap_html("t", tokens, {attribution_for(tokens, {-1.0, 0.0, 1.0}, Method::kSaliency)});
  const std::regex cell("background:(rgb\\([0-9,]+\\))");
  std::vector<std::string> colors;
  for (auto it = std::sregex_iterator(html.begin(), html.end(), cell); it != std::sregex_iterator(); ++it) {
    colors.push_back((*it)[1]);
  }
  EXPECT_EQ(colors, (std::vector<std::string>{"rgb(0,0,255)", "rgb(255,255,255)", "rgb(255,0,0)"}));
}

TEST(Heatmap, AllZeroScoresAreNeutral) {
  const std::vector<std::string> tokens = {"a", "b", "c", "d"};
  const std::string html =
      bench::render_heatmap_html("t", tokens, {attribution_for(tokens, {0, 0, 0, 0}, Method::kLime)});
  EXPECT_EQ(count(html, "rgb(255,255,255)"), 4);
}

TEST(Heatmap, RowsAreNormalizedIndependently) {
  const std::vector<std::string> tokens = {"a", "b"};
  const std::string html = bench::render_heatmap_html(
      "t", tokens,
      {attribution_for(tokens, {0.01, 0.0}, Method::kSaliency), attribution_for(tokens, {50.0, 0.0}, Method::kLime)});
  EXPECT_EQ(count(html, "rgb(255,0,0)"), 2);
}

TEST(Heatmap, TwoMethodsOverNineTokens) {
  const std::vector<std::string> tokens = {"the", "acting", "was", "not", "great", "but", "i", "loved", "it"};
  Rng rng(1);
  std::vector<double> s1(9), s2(9);
  for (int i = 0; i < 9; ++i) {
    s1[i] = rng.normal();
    s2[i] = rng.normal();
  }
  const std::string html = bench::render_heatmap_html(
      "example", tokens,
      {attribution_for(tokens, s1, Method::kPartitionShap), attribution_for(tokens, s2, Method::kIntegratedGradients)});
  EXPECT_EQ(count(html, "<tr class=\"method-row\">"), 2);
  EXPECT_EQ(count(html, "<td class=\"tok\""), 18);
  EXPECT_THAT(html, HasSubstr("partition_shap"));
  EXPECT_EQ(count(html, "http"), 0);  // nothing fetched from the network
  EXPECT_EQ(count(html, "<script"), 0);
}

TEST(Heatmap, EscapesTokensAndChecksAlignment) {
  const std::vector<std::string> tokens = {"<b>", "&"};
  const std::string html =
      bench::render_heatmap_html("t", tokens, {attribution_for(tokens, {1, 2}, Method::kSaliency)});
  EXPECT_THAT(html, HasSubstr("&lt;b&gt;"));
  EXPECT_THAT(html, HasSubstr("&amp;"));
  EXPECT_EQ(code_of([&] { bench::render_heatmap_html("t", tokens, {attribution_for({"x"}, {1}, Method::kLime)}); }),
            ErrorCode::kAlignmentError);
  EXPECT_EQ(code_of([&] {
              bench::render_heatmap_html("t", tokens, {attribution_for({"<b>", "and"}, {1, 2}, Method::kLime)});
            }),
            ErrorCode::kAlignmentError);
}

// ---------------------------------------------------------------------------
// Tables

TEST(RenderTable, SingleMethodIsBestEverywhere) {
  std::vector<metrics::CellRecord> records;
  for (Metric m : metrics::kAllMetrics) {
    records.push_back({Method::kLime, m, metrics::make_result(m, 0.5, metrics::Scope::kInstance), false});
  }
  const auto table = metrics::aggregate(records, {Method::kLime},
                                        std::vector<Metric>(std::begin(metrics::kAllMetrics),
                                                            std::end(metrics::kAllMetrics)));
  const std::string text = bench::render_table(table, bench::TableFormat::kText);
  EXPECT_EQ(count(text, "0.5000*"), 9);
  EXPECT_THAT(text, HasSubstr("every metric: lime"));
  const std::string csv = bench::render_table(table, bench::TableFormat::kCsv);
  EXPECT_EQ(count(csv, ",0.5,1"), 9);
}

TEST(RenderTable, LowerComplexityIsMarked) {
  const auto table = two_by_two(0.1, 0.9, Metric::kComplexity);
  const std::string text = bench::render_table(table, bench::TableFormat::kText);
  EXPECT_THAT(text, HasSubstr("0.1000*"));
  EXPECT_THAT(text, Not(HasSubstr("0.9000*")));
  EXPECT_THAT(text, HasSubstr("complexity ↓"));
  const std::string csv = bench::render_table(table, bench::TableFormat::kCsv);
  EXPECT_EQ(csv, "method,complexity,complexity_best\nsaliency,0.1,1\nlime,0.9,0\n");
  const json j = json::parse(bench::render_table(table, bench::TableFormat::kJson));
  EXPECT_EQ(j["cells"]["saliency"]["complexity"]["best"], true);
  EXPECT_EQ(j["cells"]["lime"]["complexity"]["best"], false);
}

TEST(RenderTable, HigherComprehensivenessIsMarked) {
  const auto table = two_by_two(0.9, 0.1, Metric::kSoftComprehensiveness);
  const std::string text = bench::render_table(table, bench::TableFormat::kText);
  EXPECT_THAT(text, HasSubstr("0.9000*"));
  EXPECT_THAT(text, Not(HasSubstr("0.1000*")));
  EXPECT_THAT(text, HasSubstr("soft_comp ↑"));
}

TEST(RenderTable, ReportsWhetherAnyMethodSweptAll) {
  std::vector<metrics::CellRecord> records = {
      {Method::kSaliency, Metric::kComplexity, metrics::make_result(Metric::kComplexity, 0.1, metrics::Scope::kInstance),
       false},
      {Method::kLime, Metric::kComplexity, metrics::make_result(Metric::kComplexity, 0.9, metrics::Scope::kInstance),
       false},
      {Method::kSaliency, Metric::kSparseness, metrics::make_result(Metric::kSparseness, 0.1, metrics::Scope::kInstance),
       false},
      {Method::kLime, Metric::kSparseness, metrics::make_result(Metric::kSparseness, 0.9, metrics::Scope::kInstance),
       false}};
  const auto table =
      metrics::aggregate(records, {Method::kSaliency, Method::kLime}, {Metric::kComplexity, Metric::kSparseness});
  EXPECT_THAT(bench::render_table(table, bench::TableFormat::kText), HasSubstr("every metric: none"));
  EXPECT_TRUE(json::parse(bench::render_table(table, bench::TableFormat::kJson))["swept_all"].is_null());
}

TEST(RenderTable, FormatNames) {
  EXPECT_EQ(bench::table_format_from_name("csv"), bench::TableFormat::kCsv);
  EXPECT_EQ(code_of([] { bench::table_format_from_name("xml"); }), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace attribench::testing
