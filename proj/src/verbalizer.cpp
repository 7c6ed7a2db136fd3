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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "attribench/errors.hpp"
#include "http.hpp"

#ifndef ATTRIBENCH_TEMPLATE_DIR
#define ATTRIBENCH_TEMPLATE_DIR "share/templates"
#endif

namespace attribench::verbalize {
namespace {

using nlohmann::json;

std::string fixed(double value, bool sign) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), sign ? "%+.4f" : "%.4f", value);
  return buffer;
}

std::string direction_phrase(metrics::Direction dir) {
  return dir == metrics::Direction::kLowerBetter ? "lower is better" : "higher is better";
}

std::string replace_all(std::string text, const std::string& key, const std::string& value) {
  const std::string needle = "{{" + key + "}}";
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + value.size())) {
    text.replace(pos, needle.size(), value);
  }
  return text;
}

void validate(const VerbalizationRequest& request) {
  if (request.kind == RequestKind::kAttribution) {
    if (request.attribution.scores.empty()) fail(ErrorCode::kValidationError, "attribution has no scores");
    if (request.attribution.token_texts.size() != request.attribution.scores.size()) {
      fail(ErrorCode::kValidationError, "attribution tokens and scores differ in length");
    }
  } else if (request.table.methods.empty() || request.table.metrics.empty()) {
    fail(ErrorCode::kValidationError, "metric table is empty");
  }
}

std::string metric_table_text(const metrics::MetricTable& table) {
  std::ostringstream out;
  out << "method";
  for (auto m : table.metrics) out << " | " << metrics::metric_name(m) << " " << metrics::direction_arrow(metrics::direction_of(m));
  out << "\n";
  for (auto method : table.methods) {
    out << method_name(method);
    for (auto m : table.metrics) {
      const auto& cell = table.at(method, m);
      out << " | " << (cell.value ? fixed(*cell.value, false) : std::string("n/a"));
    }
    out << "\n";
  }
  return out.str();
}

std::string metric_definitions_text(const metrics::MetricTable& table) {
  std::ostringstream out;
  for (auto m : table.metrics) {
    const auto dir = metrics::direction_of(m);
    out << "- " << metrics::metric_name(m) << " " << metrics::direction_arrow(dir) << " ("
        << direction_phrase(dir) << "): " << metrics::metric_definition(m) << "\n";
  }
  return out.str();
}

std::string quoted_list(const std::vector<int>& order, const Attribution& a) {
  std::string out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0) out += ", ";
    out += "\"" + a.token_texts[order[k]] + "\" (" + fixed(a.scores[order[k]], true) + ")";
  }
  return out;
}

std::string attribution_fallback(const VerbalizationRequest& request) {
  const Attribution& a = request.attribution;
  std::vector<int> positive;
  std::vector<int> negative;
  for (std::size_t i = 0; i < a.scores.size(); ++i) {
    if (a.scores[i] > 0) positive.push_back(static_cast<int>(i));
    if (a.scores[i] < 0) negative.push_back(static_cast<int>(i));
  }
  // Stable sorts keep the lower index first among equal scores.
  std::stable_sort(positive.begin(), positive.end(), [&](int x, int y) { return a.scores[x] > a.scores[y]; });
  std::stable_sort(negative.begin(), negative.end(), [&](int x, int y) { return a.scores[x] < a.scores[y]; });
  if (positive.size() > 3) positive.resize(3);
  if (negative.size() > 3) negative.resize(3);
  std::string target = request.predicted_label.empty() ? "class " + std::to_string(a.target_class)
                                                        : "\"" + request.predicted_label + "\"";
  std::string out = "According to " + method_name(a.method) + " for " + target + ", the most positive tokens are ";
  out += positive.empty() ? std::string("none") : quoted_list(positive, a);
  out += " and the most negative tokens are ";
  out += negative.empty() ? std::string("none") : quoted_list(negative, a);
  out += ".";
  return out;
}

std::string metrics_fallback(const metrics::MetricTable& table) {
  std::string out;
  for (auto m : table.metrics) {
    const auto dir = metrics::direction_of(m);
    const std::string name = metrics::metric_name(m);
    const auto best = table.best_methods(m);
    if (!out.empty()) out += " ";
    if (best.empty()) {
      out += "No method has a value for " + name + ".";
      continue;
    }
    std::string who;
    for (std::size_t k = 0; k < best.size(); ++k) {
      if (k > 0) who += k + 1 == best.size() ? " and " : ", ";
      who += method_name(best[k]);
    }
    const double value = *table.at(best.front(), m).value;
    out += "For " + name + " (" + direction_phrase(dir) + "), the best " +
           (best.size() > 1 ? "methods are " : "method is ") + who + " with " + fixed(value, false) + ".";
  }
  return out;
}

bool transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

// One chat-completion call with retries. Throws kApiError or kTimeout.
std::string chat(const PromptTemplate& prompt, const LlmConfig& config, const std::string& key) {
  const json body = {{"model", config.model},
                     {"messages",
                      {{{"role", "system"}, {"content", prompt.system}}, {{"role", "user"}, {"content", prompt.user}}}},
                     {"temperature", config.temperature},
                     {"max_tokens", config.max_tokens}};
  const auto timeout = std::chrono::milliseconds(static_cast<long>(config.timeout_seconds * 1000.0));
  const std::vector<std::pair<std::string, std::string>> headers = {{"Authorization", "Bearer " + key}};
  for (int attempt = 0;; ++attempt) {
    const auto outcome = internal::http_post(config.endpoint, body.dump(), headers, timeout);
    const bool last = attempt >= config.max_retries;
    if (!outcome.ok) {
      if (!last) {
        std::this_thread::sleep_for(std::chrono::milliseconds(config.backoff_ms << attempt));
        continue;
      }
      fail(outcome.timed_out ? ErrorCode::kTimeout : ErrorCode::kApiError,
           "chat endpoint unreachable: " + outcome.error);
    }
    if (outcome.status < 200 || outcome.status >= 300) {
      if (!last && transient_status(outcome.status)) {
        std::this_thread::sleep_for(std::chrono::milliseconds(config.backoff_ms << attempt));
        continue;
      }
      fail(ErrorCode::kApiError,
           "chat endpoint returned HTTP " + std::to_string(outcome.status) + ": " + outcome.body.substr(0, 200));
    }
    try {
      const json response = json::parse(outcome.body);
      return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      fail(ErrorCode::kApiError, "chat response has no message content: " + outcome.body.substr(0, 200));
    }
  }
}

}  // namespace

json to_json(const LlmConfig& c) {
  return {{"endpoint", c.endpoint},       {"model", c.model},
          {"api_key_env", c.api_key_env}, {"temperature", c.temperature},
          {"max_tokens", c.max_tokens},   {"timeout_seconds", c.timeout_seconds},
          {"fallback", c.fallback},       {"offline", c.offline},
          {"max_retries", c.max_retries}, {"backoff_ms", c.backoff_ms},
          {"max_in_flight", c.max_in_flight}, {"template_dir", c.template_dir}};
}

LlmConfig llm_config_from_json(const json& j) {
  LlmConfig c;
  try {
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.temperature = j.value("temperature", c.temperature);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    c.fallback = j.value("fallback", c.fallback);
    c.offline = j.value("offline", c.offline);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff_ms = j.value("backoff_ms", c.backoff_ms);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.template_dir = j.value("template_dir", c.template_dir);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfigError, std::string("invalid verbalizer config: ") + e.what());
  }
  if (j.contains("api_key")) fail(ErrorCode::kConfigError, "put the API key in an environment variable, not the config");
  if (c.max_retries < 0 || c.max_retries > 2) fail(ErrorCode::kConfigError, "max_retries must be in [0, 2]");
  if (c.max_in_flight < 1) fail(ErrorCode::kConfigError, "max_in_flight must be positive");
  if (c.timeout_seconds <= 0) fail(ErrorCode::kConfigError, "timeout_seconds must be positive");
  return c;
}

json to_json(const Verbalization& v) {
  json out = {{"text", v.text}, {"fallback", v.fallback}};
  if (!v.error.empty()) out["error"] = v.error;
  return out;
}

std::string default_template_dir() {
  if (const char* dir = std::getenv("ATTRIBENCH_TEMPLATE_DIR"); dir != nullptr && *dir != '\0') return dir;
  return ATTRIBENCH_TEMPLATE_DIR;
}

PromptTemplate load_template(const std::string& dir, const std::string& id) {
  const std::string path = (dir.empty() ? default_template_dir() : dir) + "/" + id + ".json";
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kConfigError, "prompt template not found: " + path);
  try {
    const json j = json::parse(in);
    return {j.at("system").get<std::string>(), j.at("user").get<std::string>()};
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfigError, "invalid prompt template " + path + ": " + e.what());
  }
}

std::string format_token_scores(const Attribution& attribution) {
  std::string out;
  for (std::size_t i = 0; i < attribution.scores.size(); ++i) {
    out += attribution.token_texts[i] + ": " + fixed(attribution.scores[i], true) + "\n";
  }
  return out;
}

PromptTemplate render_prompt(const VerbalizationRequest& request, const PromptTemplate& prompt) {
  std::vector<std::pair<std::string, std::string>> values;
  if (request.kind == RequestKind::kAttribution) {
    const Attribution& a = request.attribution;
    values = {{"method", method_name(a.method)},
              {"label", request.predicted_label.empty() ? "class " + std::to_string(a.target_class)
                                                        : request.predicted_label},
              {"probability", request.predicted_probability
                                  ? " (predicted probability " + fixed(*request.predicted_probability, false) + ")"
                                  : std::string()},
              {"text", request.text},
              {"token_scores", format_token_scores(a)}};
  } else {
    values = {{"metric_table", metric_table_text(request.table)},
              {"metric_definitions", metric_definitions_text(request.table)}};
  }
  PromptTemplate out = prompt;
  for (const auto& [key, value] : values) {
    out.system = replace_all(out.system, key, value);
    out.user = replace_all(out.user, key, value);
  }
  return out;
}

std::string template_fallback(const VerbalizationRequest& request) {
  return request.kind == RequestKind::kAttribution ? attribution_fallback(request) : metrics_fallback(request.table);
}

Verbalization verbalize(const VerbalizationRequest& request, const LlmConfig& config) {
  validate(request);
  Verbalization out;
  const std::string id = !request.template_id.empty()                 ? request.template_id
                         : request.kind == RequestKind::kAttribution ? "attribution"
                                                                      : "metrics";
  if (config.offline) {
    out.text = template_fallback(request);
    out.fallback = true;
    out.error = "offline";
    return out;
  }
  const char* key = std::getenv(config.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    fail(ErrorCode::kConfigError, "environment variable " + config.api_key_env + " with the API key is not set");
  }
  const PromptTemplate prompt = render_prompt(request, load_template(config.template_dir, id));
  out.prompt = prompt.user;
  try {
    out.text = chat(prompt, config, key);
  } catch (const Error& e) {
    if (!config.fallback || (e.code() != ErrorCode::kApiError && e.code() != ErrorCode::kTimeout)) throw;
    out.text = template_fallback(request);
    out.fallback = true;
    out.error = e.what();
  }
  return out;
}

Verbalization verbalize_attribution(const VerbalizationRequest& request, const LlmConfig& config) {
  if (request.kind != RequestKind::kAttribution) fail(ErrorCode::kValidationError, "expected an attribution request");
  return verbalize(request, config);
}

Verbalization verbalize_metrics(const metrics::MetricTable& table, const LlmConfig& config) {
  VerbalizationRequest request;
  request.kind = RequestKind::kMetrics;
  request.table = table;
  return verbalize(request, config);
}

std::vector<Verbalization> verbalize_all(const std::vector<VerbalizationRequest>& requests, const LlmConfig& config) {
  for (const auto& r : requests) validate(r);
  std::vector<Verbalization> results(requests.size());
  std::vector<std::exception_ptr> errors(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        results[i] = verbalize(requests[i], config);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.max_in_flight), requests.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace attribench::verbalize
