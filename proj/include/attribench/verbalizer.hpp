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

#ifndef ATTRIBENCH_VERBALIZER_HPP_
#define ATTRIBENCH_VERBALIZER_HPP_

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attribench/aggregate.hpp"
#include "attribench/attribution.hpp"

// Natural-language summaries of attribution scores and metric tables via a
// chat-completion HTTP API, with a deterministic offline fallback.
namespace attribench::verbalize {

struct LlmConfig {
  std::string endpoint = "https://api.together.xyz/v1/chat/completions";
  std::string model = "meta-llama/Llama-3.3-70B-Instruct-Turbo";
  // Name of the environment variable holding the bearer token. The key
  // itself is read at call time and never stored.
  std::string api_key_env = "ATTRIBENCH_LLM_API_KEY";
  double temperature = 0.0;
  int max_tokens = 512;
  double timeout_seconds = 60.0;
  // Use the template text when the API fails or times out.
  bool fallback = true;
  // Skip the API entirely and always use the template text.
  bool offline = false;
  int max_retries = 2;
  int backoff_ms = 500;
  int max_in_flight = 2;
  // Directory of prompt templates; empty means the bundled templates.
  std::string template_dir;
};

// Serializes everything except secrets (there are none stored).
nlohmann::json to_json(const LlmConfig& config);
LlmConfig llm_config_from_json(const nlohmann::json& json);

enum class RequestKind { kAttribution, kMetrics };

struct VerbalizationRequest {
  RequestKind kind = RequestKind::kAttribution;
  // Attribution kind.
  Attribution attribution;
  std::string text;             // the explained input
  std::string predicted_label;  // label the scores explain
  std::optional<double> predicted_probability;
  // Metrics kind.
  metrics::MetricTable table;
  // Template file stem; empty picks "attribution" or "metrics" by kind.
  std::string template_id;
};

struct Verbalization {
  std::string text;
  bool fallback = false;
  std::string prompt;  // rendered user message
  std::string error;   // why the fallback was used, if it was
};

nlohmann::json to_json(const Verbalization& verbalization);

struct PromptTemplate {
  std::string system;
  std::string user;
};

// Reads `<dir>/<id>.json` with "system" and "user" fields.
PromptTemplate load_template(const std::string& dir, const std::string& id);
std::string default_template_dir();

// Fills {{placeholders}} in both messages from the request.
PromptTemplate render_prompt(const VerbalizationRequest& request,
                             const PromptTemplate& prompt);

// "token: +0.1234" lines in token order, the verbatim form used in prompts.
std::string format_token_scores(const Attribution& attribution);

// Deterministic text: the top three positive and top three negative tokens,
// or the best method per metric. Ties go to the lower index.
std::string template_fallback(const VerbalizationRequest& request);

// Throws kValidationError for an empty payload and kConfigError when the key
// variable is unset (checked before any network traffic). API failures and
// timeouts throw kApiError / kTimeout unless fallback is enabled.
Verbalization verbalize(const VerbalizationRequest& request, const LlmConfig& config);
Verbalization verbalize_attribution(const VerbalizationRequest& request,
                                    const LlmConfig& config);
Verbalization verbalize_metrics(const metrics::MetricTable& table,
                                const LlmConfig& config);

// Runs requests with at most config.max_in_flight concurrent API calls.
// Results keep the request order.
std::vector<Verbalization> verbalize_all(const std::vector<VerbalizationRequest>& requests,
                                         const LlmConfig& config);

}  // namespace attribench::verbalize

#endif  // ATTRIBENCH_VERBALIZER_HPP_
