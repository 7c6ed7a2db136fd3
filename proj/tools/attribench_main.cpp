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

// Command-line front end: explain, benchmark, report, convert, verbalize and
// check-backend. Exit codes: 0 success, 1 user error, 2 backend error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "attribench/bench.hpp"
#include "attribench/datasets.hpp"
#include "attribench/errors.hpp"
#include "attribench/explainers.hpp"
#include "attribench/protocol.hpp"
#include "attribench/reference_model.hpp"
#include "attribench/verbalizer.hpp"

namespace {

using attribench::Error;
using attribench::ErrorCode;
using nlohmann::json;
namespace bench = attribench::bench;
namespace verbalize = attribench::verbalize;

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kBackendError = 2;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBackendUnavailable:
    case ErrorCode::kTimeout:
    case ErrorCode::kProtocolError:
    case ErrorCode::kApiError:
      return kBackendError;
    default:
      return kUserError;
  }
}

std::vector<std::string> split_list(const std::vector<std::string>& values) {
  std::vector<std::string> out;
  for (const auto& v : values) {
    std::stringstream ss(v);
    for (std::string item; std::getline(ss, item, ',');) {
      if (!item.empty()) out.push_back(item);
    }
  }
  return out;
}

std::vector<attribench::Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<attribench::Method> out;
  for (const auto& name : split_list(names)) {
    const auto m = attribench::method_from_name(name);
    if (!m) {
      attribench::fail(ErrorCode::kInvalidArgument,
                       "unknown method '" + name + "'; valid methods: " + attribench::method_names_joined());
    }
    out.push_back(*m);
  }
  return out;
}

std::vector<attribench::metrics::Metric> parse_metrics(const std::vector<std::string>& names) {
  std::vector<attribench::metrics::Metric> out;
  for (const auto& name : split_list(names)) {
    const auto m = attribench::metrics::metric_from_name(name);
    if (!m) {
      attribench::fail(ErrorCode::kInvalidArgument,
                       "unknown metric '" + name + "'; valid metrics: " + attribench::metrics::metric_names_joined());
    }
    out.push_back(*m);
  }
  return out;
}

// Where the model comes from, shared by several subcommands.
struct BackendFlags {
  std::string kind = "reference";
  std::string command;
  std::string url;
  std::uint64_t seed = 0;
  std::string fit_on;
  int fit_epochs = 200;
  double fit_lr = 0.1;
  bool no_mask = false;

  void add_to(CLI::App* app) {
    app->add_option("--backend", kind, "Model backend: reference or remote")
        ->check(CLI::IsMember({"reference", "remote"}));
    app->add_option("--cmd", command, "Command line of a protocol server to spawn (implies remote)");
    app->add_option("--url", url, "HTTP endpoint of a protocol server (implies remote)");
    app->add_option("--model-seed", seed, "Seed of the reference model");
    app->add_option("--fit-on", fit_on, "Canonical dataset to train the reference model on");
    app->add_option("--fit-epochs", fit_epochs, "Training epochs for --fit-on");
    app->add_option("--fit-lr", fit_lr, "Learning rate for --fit-on");
    app->add_flag("--no-mask-token", no_mask, "Reference model without a mask token");
  }

  std::unique_ptr<attribench::Backend> build() const {
    if (!command.empty()) return attribench::protocol::connect_command(command);
    if (!url.empty()) return attribench::protocol::connect_url(url);
    if (kind == "remote") attribench::fail(ErrorCode::kConfigError, "remote backend needs --cmd or --url");
    bench::BackendSpec spec;
    spec.seed = seed;
    spec.mask_token = !no_mask;
    attribench::data::Dataset dataset;
    if (!fit_on.empty()) {
      dataset = attribench::data::load_canonical(fit_on);
      spec.fit_epochs = fit_epochs;
      spec.fit_lr = fit_lr;
    } else {
      // Untrained model over two generic labels.
      dataset.label_names = {"0", "1"};
      spec.fit_epochs = 0;
    }
    return bench::make_backend(spec, dataset);
  }
};

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) attribench::fail(ErrorCode::kConfigError, "cannot write " + path);
  return file;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) attribench::fail(ErrorCode::kConfigError, "cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    attribench::fail(ErrorCode::kParseError, path + " is not valid JSON: " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attribench: explain text classifiers and benchmark the explanations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", bench::version());

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "Explain one text with one or more methods");
  std::string text;
  std::vector<std::string> pair;
  std::vector<std::string> explain_methods;
  std::optional<int> target;
  std::string explain_out;
  std::string heatmap_path;
  std::uint64_t explain_seed = 0;
  int ig_steps = 64, lime_samples = 1000, shap_budget = 512, interaction_budget = 2048;
  BackendFlags explain_backend;
  explain_cmd->add_option("--text", text, "Text to explain");
  explain_cmd->add_option("--pair", pair, "Premise and hypothesis instead of --text")->expected(2);
  explain_cmd->add_option("--method", explain_methods, "Method(s), comma separated or repeated")->required();
  explain_cmd->add_option("--target", target, "Class to explain (default: the predicted class)");
  explain_cmd->add_option("--output", explain_out, "Attribution JSONL file (default: standard output)");
  explain_cmd->add_option("--heatmap", heatmap_path, "Also write an HTML heatmap here");
  explain_cmd->add_option("--seed", explain_seed, "Seed for sampled methods");
  explain_cmd->add_option("--ig-steps", ig_steps, "Integrated gradients steps");
  explain_cmd->add_option("--lime-samples", lime_samples, "LIME perturbation samples");
  explain_cmd->add_option("--shap-budget", shap_budget, "Partition SHAP evaluation budget");
  explain_cmd->add_option("--interaction-budget", interaction_budget, "SHAP interaction budget");
  explain_backend.add_to(explain_cmd);

  // benchmark
  auto* bench_cmd = app.add_subcommand("benchmark", "Run a benchmark from a JSON config");
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> bench_seed;
  std::optional<int> workers;
  std::optional<int> max_instances;
  std::vector<std::string> bench_methods, bench_metrics;
  std::string bench_cmd_line, bench_url, bench_dataset;
  bool no_heatmaps = false;
  bench_cmd->add_option("--config", config_path, "Benchmark config JSON")->required();
  bench_cmd->add_option("--output-dir", out_dir, "Overrides output_dir");
  bench_cmd->add_option("--seed", bench_seed, "Overrides seed");
  bench_cmd->add_option("--workers", workers, "Overrides workers");
  bench_cmd->add_option("--max-instances", max_instances, "Overrides max_instances");
  bench_cmd->add_option("--methods", bench_methods, "Overrides methods");
  bench_cmd->add_option("--metrics", bench_metrics, "Overrides metrics");
  bench_cmd->add_option("--dataset", bench_dataset, "Overrides dataset (relative to the working directory)");
  bench_cmd->add_option("--cmd", bench_cmd_line, "Overrides the backend with a spawned protocol server");
  bench_cmd->add_option("--url", bench_url, "Overrides the backend with an HTTP protocol server");
  bench_cmd->add_flag("--no-heatmaps", no_heatmaps, "Skip the HTML heatmaps");

  // report
  auto* report_cmd = app.add_subcommand("report", "Re-render the table of a saved report");
  std::string report_path;
  std::string report_format = "text";
  std::string report_out;
  report_cmd->add_option("report", report_path, "report.json or the directory holding it")->required();
  report_cmd->add_option("--format", report_format, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  report_cmd->add_option("--output", report_out, "Output file (default: standard output)");

  // convert
  auto* convert_cmd = app.add_subcommand("convert", "Convert a raw corpus to the canonical JSONL schema");
  std::string convert_format, convert_in, convert_out;
  convert_cmd->add_option("--format", convert_format, "movies, hatexplain or esnli")
      ->required()
      ->check(CLI::IsMember({"movies", "hatexplain", "esnli"}));
  convert_cmd->add_option("--input", convert_in, "Raw directory (movies) or file")->required();
  convert_cmd->add_option("--output", convert_out, "Canonical JSONL output (default: standard output)");

  // verbalize
  auto* verbalize_cmd = app.add_subcommand("verbalize", "Summarize attributions or a metric table in words");
  std::string attributions_path, metrics_report, llm_config_path, instance_id;
  verbalize::LlmConfig llm;
  bool offline = false, no_fallback = false;
  auto* source = verbalize_cmd->add_option_group("source");
  source->add_option("--attributions", attributions_path, "Attribution JSONL (one summary per record)");
  source->add_option("--report", metrics_report, "report.json whose metric table to summarize");
  source->require_option(1);
  verbalize_cmd->add_option("--instance", instance_id, "Only records of this instance id");
  verbalize_cmd->add_option("--llm-config", llm_config_path, "LLM settings JSON");
  verbalize_cmd->add_option("--endpoint", llm.endpoint, "Chat-completion URL");
  verbalize_cmd->add_option("--model", llm.model, "Model name");
  verbalize_cmd->add_option("--api-key-env", llm.api_key_env, "Environment variable holding the API key");
  verbalize_cmd->add_option("--template-dir", llm.template_dir, "Prompt template directory");
  verbalize_cmd->add_flag("--offline", offline, "Template text only; no API calls");
  verbalize_cmd->add_flag("--no-fallback", no_fallback, "Fail instead of falling back to template text");

  // check-backend
  auto* check_cmd = app.add_subcommand("check-backend", "Print a backend's info and capabilities");
  BackendFlags check_backend;
  check_backend.add_to(check_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUserError;
  }

  try {
    if (*explain_cmd) {
      const auto methods = parse_methods(explain_methods);
      if (text.empty() == pair.empty()) attribench::fail(ErrorCode::kInvalidArgument, "give exactly one of --text or --pair");
      const std::string input =
          pair.empty() ? text : pair[0] + " " + attribench::data::kPairSeparator + " " + pair[1];
      const auto backend = explain_backend.build();
      for (auto m : methods) {
        if (!attribench::explain::supports(*backend, m)) {
          attribench::fail(ErrorCode::kConfigError, "backend cannot run " + attribench::method_name(m));
        }
      }
      const auto seq = backend->tokenize(input);
      if (seq.empty()) attribench::fail(ErrorCode::kEmptyInput, "input has no tokens");
      const auto probs = backend->predict_one(seq).probs;
      const int cls = target.value_or(
          static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin()));
      attribench::explain::ExplainOptions options;
      options.ig.steps = ig_steps;
      options.lime.n_samples = lime_samples;
      options.lime.seed = explain_seed;
      options.partition.budget = shap_budget;
      options.partition.seed = explain_seed;
      options.interactions.budget = interaction_budget;
      options.interactions.seed = explain_seed;
      std::vector<attribench::Attribution> results;
      for (auto m : methods) {
        auto a = attribench::explain::explain(m, *backend, seq, cls, options);
        a.instance_id = "input";
        results.push_back(std::move(a));
      }
      std::ofstream file;
      std::ostream& out = open_output(explain_out, file);
      for (const auto& a : results) out << attribench::to_json(a).dump() << "\n";
      if (!heatmap_path.empty()) {
        std::ofstream html(heatmap_path, std::ios::binary);
        if (!html) attribench::fail(ErrorCode::kConfigError, "cannot write " + heatmap_path);
        html << bench::render_heatmap_html(input, seq.tokens, results);
      }
      return kOk;
    }

    if (*bench_cmd) {
      auto config = bench::load_config(config_path);
      // Flags override the config file, which overrides built-in defaults.
      if (!out_dir.empty()) config.output_dir = out_dir;
      if (bench_seed) config.seed = *bench_seed;
      if (workers) config.workers = *workers;
      if (max_instances) config.max_instances = *max_instances;
      if (!bench_methods.empty()) config.methods = parse_methods(bench_methods);
      if (!bench_metrics.empty()) config.metrics = parse_metrics(bench_metrics);
      if (!bench_dataset.empty()) config.dataset = bench_dataset;
      if (!bench_cmd_line.empty() || !bench_url.empty()) {
        config.backend.kind = bench::BackendSpec::Kind::kRemote;
        config.backend.command = bench_cmd_line;
        config.backend.endpoint = bench_url;
      }
      if (no_heatmaps) config.heatmaps = false;
      if (config.workers < 1) attribench::fail(ErrorCode::kConfigError, "workers must be positive");
      const auto report = bench::run_benchmark(config);
      bench::write_outputs(report, config.output_dir, config.heatmaps);
      std::cout << bench::render_table(report.table, bench::TableFormat::kText);
      std::cout << "wrote " << config.output_dir.string() << "/report.json";
      if (!report.failures.empty()) std::cout << " (" << report.failures.size() << " failures recorded)";
      std::cout << "\n";
      return kOk;
    }

    if (*report_cmd) {
      std::filesystem::path path = report_path;
      if (std::filesystem::is_directory(path)) path /= "report.json";
      const json report = read_json_file(path.string());
      if (!report.contains("table")) attribench::fail(ErrorCode::kParseError, path.string() + " has no table");
      const auto table = attribench::metrics::table_from_json(report["table"]);
      std::ofstream file;
      open_output(report_out, file) << bench::render_table(table, bench::table_format_from_name(report_format));
      return kOk;
    }

    if (*convert_cmd) {
      namespace data = attribench::data;
      const data::Dataset dataset = convert_format == "movies"       ? data::convert_movies(convert_in)
                                    : convert_format == "hatexplain" ? data::convert_hatexplain(convert_in)
                                                                     : data::convert_esnli(convert_in);
      std::ofstream file;
      open_output(convert_out, file) << data::serialize_canonical(dataset);
      std::cerr << "converted " << dataset.instances.size() << " instances\n";
      return kOk;
    }

    if (*verbalize_cmd) {
      verbalize::LlmConfig config = llm;
      if (!llm_config_path.empty()) {
        config = verbalize::llm_config_from_json(read_json_file(llm_config_path));
        // Explicit flags still win over the file.
        if (verbalize_cmd->count("--endpoint")) config.endpoint = llm.endpoint;
        if (verbalize_cmd->count("--model")) config.model = llm.model;
        if (verbalize_cmd->count("--api-key-env")) config.api_key_env = llm.api_key_env;
        if (verbalize_cmd->count("--template-dir")) config.template_dir = llm.template_dir;
      }
      if (offline) config.offline = true;
      if (no_fallback) config.fallback = false;
      std::vector<verbalize::VerbalizationRequest> requests;
      if (!metrics_report.empty()) {
        const json report = read_json_file(metrics_report);
        verbalize::VerbalizationRequest r;
        r.kind = verbalize::RequestKind::kMetrics;
        r.table = attribench::metrics::table_from_json(report.value("table", json::object()));
        requests.push_back(r);
      } else {
        std::ifstream in(attributions_path);
        if (!in) attribench::fail(ErrorCode::kConfigError, "cannot read " + attributions_path);
        for (std::string line; std::getline(in, line);) {
          if (line.empty()) continue;
          verbalize::VerbalizationRequest r;
          r.attribution = attribench::attribution_from_json(json::parse(line));
          if (!instance_id.empty() && r.attribution.instance_id != instance_id) continue;
          std::string joined;
          for (const auto& t : r.attribution.token_texts) joined += (joined.empty() ? "" : " ") + t;
          r.text = joined;
          requests.push_back(r);
        }
        if (requests.empty()) attribench::fail(ErrorCode::kValidationError, "no attribution records to verbalize");
      }
      const auto results = verbalize::verbalize_all(requests, config);
      for (std::size_t i = 0; i < results.size(); ++i) {
        json line = verbalize::to_json(results[i]);
        if (requests[i].kind == verbalize::RequestKind::kAttribution) {
          line["instance_id"] = requests[i].attribution.instance_id;
          line["method"] = attribench::method_name(requests[i].attribution.method);
        }
        std::cout << line.dump() << "\n";
      }
      return kOk;
    }

    if (*check_cmd) {
      const auto backend = check_backend.build();
      json info = attribench::protocol::encode(backend->info());
      json methods = json::array();
      for (auto m : attribench::kAllMethods) {
        if (attribench::explain::supports(*backend, m)) methods.push_back(attribench::method_name(m));
      }
      info["supported_methods"] = methods;
      std::cout << info.dump(2) << "\n";
      return kOk;
    }
  } catch (const Error& e) {
    std::cerr << "attribench: " << attribench::error_code_name(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "attribench: INTERNAL: " << e.what() << "\n";
    return kUserError;
  }
  return kUserError;
}
