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

#include "attribench/verbalizer.hpp"

#include <stdlib.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "attribench/errors.hpp"
#include "httplib.h"

namespace attribench::testing {
namespace {

using metrics::Metric;
using nlohmann::json;
using ::testing::HasSubstr;
using ::testing::Not;

constexpr char kKeyVar[] = "ATTRIBENCH_TEST_LLM_KEY";

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

Attribution make_attribution(std::vector<std::string> tokens, std::vector<double> scores,
                             Method method = Method::kPartitionShap) {
  Attribution a;
  a.instance_id = "x";
  a.method = method;
  a.target_class = 1;
  a.token_texts = std::move(tokens);
  a.scores = std::move(scores);
  return a;
}

verbalize::VerbalizationRequest attribution_request() {
  verbalize::VerbalizationRequest r;
  r.kind = verbalize::RequestKind::kAttribution;
  r.attribution = make_attribution({"a", "truly", "moving", "movie", "not", "boring"},
                                   {0.0, 0.35, 0.6, 0.9, -0.8, -0.1});
  r.text = "a truly moving movie not boring";
  r.predicted_label = "positive";
  r.predicted_probability = 0.93;
  return r;
}

metrics::MetricTable make_table(const std::vector<std::tuple<Method, Metric, double>>& cells) {
  std::vector<metrics::CellRecord> records;
  std::vector<Method> methods;
  std::vector<Metric> ms;
  for (const auto& [method, metric, value] : cells) {
    records.push_back({method, metric, metrics::make_result(metric, value, metrics::Scope::kInstance), false});
    if (std::find(methods.begin(), methods.end(), method) == methods.end()) methods.push_back(method);
    if (std::find(ms.begin(), ms.end(), metric) == ms.end()) ms.push_back(metric);
  }
  return metrics::aggregate(records, methods, ms);
}

// Chat-completion stand-in. By default it answers with the user message it
// received, so tests can see exactly what was sent.
class ChatStub : public ::testing::Test {
 protected:
  void SetUp() override {
    setenv(kKeyVar, "sk-test-123", 1);
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int now = ++in_flight_;
      {
        std::lock_guard<std::mutex> lock(mutex_);
        max_in_flight_ = std::max(max_in_flight_, now);
        bodies_.push_back(json::parse(req.body));
        auth_.push_back(req.get_header_value("Authorization"));
      }
      const int n = ++calls_;
      if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
      --in_flight_;
      if (n <= failures_before_success_) {
        res.status = failure_status_;
        res.set_content("{\"error\":\"overloaded\"}", "application/json");
        return;
      }
      const json body = json::parse(req.body);
      const std::string content = body["messages"][1]["content"].get<std::string>();
      res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    config_.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    config_.api_key_env = kKeyVar;
    config_.backoff_ms = 1;
    config_.timeout_seconds = 5;
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
    unsetenv(kKeyVar);
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  verbalize::LlmConfig config_;
  std::mutex mutex_;
  std::vector<json> bodies_;
  std::vector<std::string> auth_;
  std::atomic<int> calls_{0};
  std::atomic<int> in_flight_{0};
  int max_in_flight_ = 0;
  int delay_ms_ = 0;
  int failures_before_success_ = 0;
  int failure_status_ = 503;
};

TEST_F(ChatStub, EchoedPromptContainsEveryTokenScorePair) {
  const auto request = attribution_request();
  const auto out = verbalize::verbalize_attribution(request, config_);
  EXPECT_FALSE(out.fallback);
  for (const char* pair : {"a: +0.0000", "truly: +0.3500", "moving: +0.6000", "movie: +0.9000", "not: -0.8000",
                           "boring: -0.1000"}) {
    EXPECT_THAT(out.text, HasSubstr(pair));
  }
  EXPECT_EQ(out.text, out.prompt);
  EXPECT_THAT(out.prompt, HasSubstr("positive"));
  EXPECT_THAT(out.prompt, HasSubstr("partition_shap"));
}

TEST_F(ChatStub, RequestHasTheChatCompletionShape) {
  verbalize::verbalize_attribution(attribution_request(), config_);
  ASSERT_EQ(bodies_.size(), 1u);
  const json& body = bodies_[0];
  EXPECT_EQ(body["model"], "meta-llama/Llama-3.3-70B-Instruct-Turbo");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["max_tokens"], 512);
  ASSERT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["role"], "user");
  EXPECT_THAT(body["messages"][0]["content"].get<std::string>(), HasSubstr("only restate"));
  EXPECT_EQ(auth_[0], "Bearer sk-test-123");
}

TEST_F(ChatStub, PromptCarriesNoGoldLabelsOrModelInternals) {
  verbalize::verbalize_attribution(attribution_request(), config_);
  const std::string sent = bodies_.at(0).dump();
  EXPECT_THAT(sent, Not(HasSubstr("gold")));
  EXPECT_THAT(sent, Not(HasSubstr("logit")));
  EXPECT_THAT(sent, Not(HasSubstr("embedding")));
  EXPECT_THAT(sent, Not(HasSubstr("sk-test-123")));
}

TEST_F(ChatStub, MetricsPromptHasAllCellsAndArrows) {
  const auto table = make_table({{Method::kSaliency, Metric::kComplexity, 0.125},
                                 {Method::kSaliency, Metric::kSoftComprehensiveness, 0.5},
                                 {Method::kLime, Metric::kComplexity, 0.75},
                                 {Method::kLime, Metric::kSoftComprehensiveness, 0.0625}});
  const auto out = verbalize::verbalize_metrics(table, config_);
  EXPECT_FALSE(out.fallback);
  for (const char* cell : {"0.1250", "0.5000", "0.7500", "0.0625"}) EXPECT_THAT(out.prompt, HasSubstr(cell));
  EXPECT_THAT(out.prompt, HasSubstr("soft_comp ↑"));
  EXPECT_THAT(out.prompt, HasSubstr("complexity ↓"));
  EXPECT_THAT(out.prompt, HasSubstr(metrics::metric_definition(Metric::kComplexity)));
}

TEST_F(ChatStub, MissingKeyFailsBeforeAnyRequest) {
  unsetenv(kKeyVar);
  EXPECT_EQ(code_of([&] { verbalize::verbalize_attribution(attribution_request(), config_); }),
            ErrorCode::kConfigError);
  EXPECT_EQ(calls_.load(), 0);
}

TEST_F(ChatStub, TransientFailuresAreRetried) {
  failures_before_success_ = 2;
  const auto out = verbalize::verbalize_attribution(attribution_request(), config_);
  EXPECT_FALSE(out.fallback);
  EXPECT_EQ(calls_.load(), 3);
}

TEST_F(ChatStub, PersistentFailureGivesApiErrorAfterTwoRetries) {
  failures_before_success_ = 100;
  config_.fallback = false;
  try {
    verbalize::verbalize_attribution(attribution_request(), config_);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kApiError);
    EXPECT_THAT(e.what(), HasSubstr("503"));
    EXPECT_THAT(e.what(), HasSubstr("overloaded"));
  }
  EXPECT_EQ(calls_.load(), 3);
}

TEST_F(ChatStub, ClientErrorsAreNotRetried) {
  failures_before_success_ = 100;
  failure_status_ = 401;
  const auto out = verbalize::verbalize_attribution(attribution_request(), config_);
  EXPECT_TRUE(out.fallback);
  EXPECT_THAT(out.error, HasSubstr("401"));
  EXPECT_EQ(calls_.load(), 1);
}

TEST_F(ChatStub, SlowEndpointTimesOutAndFallsBack) {
  delay_ms_ = 1000;
  config_.timeout_seconds = 0.2;
  config_.max_retries = 0;
  config_.fallback = false;
  EXPECT_EQ(code_of([&] { verbalize::verbalize_attribution(attribution_request(), config_); }), ErrorCode::kTimeout);
  config_.fallback = true;
  const auto request = attribution_request();
  const auto out = verbalize::verbalize_attribution(request, config_);
  EXPECT_TRUE(out.fallback);
  EXPECT_EQ(out.text, verbalize::template_fallback(request));
}

TEST_F(ChatStub, AtMostTwoRequestsInFlight) {
  delay_ms_ = 100;
  std::vector<verbalize::VerbalizationRequest> requests;
  for (int i = 0; i < 6; ++i) {
    auto r = attribution_request();
    r.text = "instance " + std::to_string(i);
    requests.push_back(r);
  }
  const auto out = verbalize::verbalize_all(requests, config_);
  ASSERT_EQ(out.size(), 6u);
  for (int i = 0; i < 6; ++i) EXPECT_THAT(out[i].text, HasSubstr("instance " + std::to_string(i)));
  EXPECT_LE(max_in_flight_, 2);
  EXPECT_EQ(max_in_flight_, 2);
}

TEST_F(ChatStub, TemplatesAreDataFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "attribench_templates_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "terse.json") << R"({"system": "S", "user": "[{{method}}] {{token_scores}}"})";
  config_.template_dir = dir.string();
  auto request = attribution_request();
  request.template_id = "terse";
  const auto out = verbalize::verbalize_attribution(request, config_);
  EXPECT_EQ(out.prompt.rfind("[partition_shap] a: +0.0000\n", 0), 0u);
  request.template_id = "missing";
  EXPECT_EQ(code_of([&] { verbalize::verbalize_attribution(request, config_); }), ErrorCode::kConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Verbalizer, UnreachableEndpointFallsBack) {
  setenv(kKeyVar, "k", 1);
  verbalize::LlmConfig config;
  config.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  config.api_key_env = kKeyVar;
  config.backoff_ms = 1;
  const auto request = attribution_request();
  const auto out = verbalize::verbalize_attribution(request, config);
  EXPECT_TRUE(out.fallback);
  EXPECT_EQ(verbalize::to_json(out)["fallback"], true);
  EXPECT_EQ(out.text, verbalize::template_fallback(request));
  config.fallback = false;
  EXPECT_EQ(code_of([&] { verbalize::verbalize_attribution(request, config); }), ErrorCode::kApiError);
  unsetenv(kKeyVar);
}

TEST(Verbalizer, OfflineModeNeedsNoKey) {
  verbalize::LlmConfig config;
  config.offline = true;
  config.api_key_env = "ATTRIBENCH_UNSET_VARIABLE_FOR_TEST";
  const auto out = verbalize::verbalize_attribution(attribution_request(), config);
  EXPECT_TRUE(out.fallback);
}

TEST(TemplateFallback, NamesMostPositiveAndMostNegative) {
  verbalize::VerbalizationRequest r;
  r.attribution = make_attribution({"movie", "not", "a"}, {0.9, -0.8, 0.0}, Method::kPartitionShap);
  EXPECT_EQ(verbalize::template_fallback(r),
            "According to partition_shap for class 1, the most positive tokens are \"movie\" (+0.9000) and the most "
            "negative tokens are \"not\" (-0.8000).");
}

TEST(TemplateFallback, TopThreeEachWayWithLowerIndexWinningTies) {
  verbalize::VerbalizationRequest r;
  r.predicted_label = "positive";
  r.attribution = make_attribution({"t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7"},
                                   {0.5, 0.2, 0.5, -0.3, 0.1, -0.3, 0.4, -0.05}, Method::kLime);
  EXPECT_EQ(verbalize::template_fallback(r),
            "According to lime for \"positive\", the most positive tokens are \"t0\" (+0.5000), \"t2\" (+0.5000), "
            "\"t6\" (+0.4000) and the most negative tokens are \"t3\" (-0.3000), \"t5\" (-0.3000), \"t7\" (-0.0500).");
}

TEST(TemplateFallback, AllZeroScoresNameNothing) {
  verbalize::VerbalizationRequest r;
  r.attribution = make_attribution({"a", "b"}, {0.0, 0.0}, Method::kSaliency);
  EXPECT_THAT(verbalize::template_fallback(r), HasSubstr("positive tokens are none and the most negative tokens are none"));
}

TEST(TemplateFallback, SingleCellTableIsOneSentence) {
  verbalize::VerbalizationRequest r;
  r.kind = verbalize::RequestKind::kMetrics;
  r.table = make_table({{Method::kSaliency, Metric::kComplexity, 0.25}});
  EXPECT_EQ(verbalize::template_fallback(r),
            "For complexity (lower is better), the best method is saliency with 0.2500.");
}

TEST(TemplateFallback, OneSentencePerMetricRespectingDirection) {
  verbalize::VerbalizationRequest r;
  r.kind = verbalize::RequestKind::kMetrics;
  r.table = make_table({{Method::kSaliency, Metric::kComplexity, 0.1},
                        {Method::kLime, Metric::kComplexity, 0.9},
                        {Method::kSaliency, Metric::kSoftComprehensiveness, 0.1},
                        {Method::kLime, Metric::kSoftComprehensiveness, 0.9},
                        {Method::kSaliency, Metric::kTokenF1, 0.5},
                        {Method::kLime, Metric::kTokenF1, 0.5}});
  EXPECT_EQ(verbalize::template_fallback(r),
            "For soft_comp (higher is better), the best method is lime with 0.9000. "
            "For token_f1 (higher is better), the best methods are saliency and lime with 0.5000. "
            "For complexity (lower is better), the best method is saliency with 0.1000.");
}

TEST(TemplateFallback, IsAPureFunctionOfTheRequest) {
  const auto r = attribution_request();
  EXPECT_EQ(verbalize::template_fallback(r), verbalize::template_fallback(r));
}

TEST(Verbalizer, EmptyPayloadsAreRejected) {
  verbalize::LlmConfig config;
  config.offline = true;
  EXPECT_EQ(code_of([&] { verbalize::verbalize_metrics(metrics::MetricTable{}, config); }),
            ErrorCode::kValidationError);
  verbalize::VerbalizationRequest empty;
  EXPECT_EQ(code_of([&] { verbalize::verbalize_attribution(empty, config); }), ErrorCode::kValidationError);
}

TEST(LlmConfig, JsonRoundTripAndValidation) {
  verbalize::LlmConfig c;
  c.model = "small-model";
  c.max_tokens = 64;
  const auto back = verbalize::llm_config_from_json(verbalize::to_json(c));
  EXPECT_EQ(back.model, "small-model");
  EXPECT_EQ(back.max_tokens, 64);
  EXPECT_EQ(back.temperature, 0.0);
  EXPECT_EQ(code_of([] { verbalize::llm_config_from_json({{"api_key", "sk"}}); }), ErrorCode::kConfigError);
  EXPECT_EQ(code_of([] { verbalize::llm_config_from_json({{"max_retries", 5}}); }), ErrorCode::kConfigError);
}

TEST(LlmConfig, SerializedConfigNeverHoldsTheKey) {
  setenv(kKeyVar, "sk-secret-value", 1);
  verbalize::LlmConfig c;
  c.api_key_env = kKeyVar;
  EXPECT_THAT(verbalize::to_json(c).dump(), Not(HasSubstr("sk-secret-value")));
  unsetenv(kKeyVar);
}

}  // namespace
}  // namespace attribench::testing
