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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "attribench/alignment.hpp"
#include "attribench/errors.hpp"
#include "attribench/protocol.hpp"
#include "attribench/reference_model.hpp"
#include "attribench/rng.hpp"

#ifndef ATTRIBENCH_VERSION
#define ATTRIBENCH_VERSION "0.0.0"
#endif

namespace attribench::bench {
namespace {

using nlohmann::json;
using metrics::Metric;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

[[noreturn]] void config_error(const std::string& message) { fail(ErrorCode::kConfigError, message); }

void check_keys(const json& object, const std::set<std::string>& allowed, const std::string& where) {
  if (!object.is_object()) config_error(where + " must be an object");
  for (const auto& [key, value] : object.items()) {
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& path) {
  const std::filesystem::path p(path);
  return p.is_absolute() || base.empty() ? p : base / p;
}

bool needs_embeddings(Metric m) { return m == Metric::kSoftSufficiency || m == Metric::kSoftComprehensiveness; }
bool is_sweep(Metric m) { return m == Metric::kFadNauc || m == Metric::kAucTp; }

std::string format_value(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4f", v);
  return buffer;
}

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string safe_file_stem(const std::string& id) {
  std::string out;
  for (char c : id) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_';
  return out.substr(0, 64);
}

json failure_json(const Failure& f) {
  return {{"instance_id", f.instance_id.empty() ? json(nullptr) : json(f.instance_id)},
          {"method", method_name(f.method)},
          {"metric", f.metric ? json(metrics::metric_name(*f.metric)) : json(nullptr)},
          {"code", f.code},
          {"message", f.message}};
}

Failure make_failure(const std::string& id, Method method, std::optional<Metric> metric, const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  return {id, method, metric, std::string(err ? error_code_name(err->code()) : "INTERNAL"), e.what()};
}

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Everything computed for one instance; merged in instance order afterwards.
struct InstanceOutcome {
  std::optional<InstanceRecord> record;
  TokenSequence seq;
  std::vector<std::optional<Attribution>> attributions;  // per method slot
  std::vector<MetricRecord> results;
  std::vector<Failure> failures;
  std::vector<double> explain_seconds;  // per method slot
  double metric_seconds = 0.0;
};

}  // namespace

std::string version() { return ATTRIBENCH_VERSION; }

BenchmarkConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  BenchmarkConfig c;
  try {
    check_keys(j, {"backend", "dataset", "methods", "metrics", "sampling", "plausibility_k", "target", "sweep_scope",
                   "max_instances", "seed", "workers", "output_dir", "heatmaps"},
               "config");
    if (j.contains("backend")) {
      const json& b = j["backend"];
      check_keys(b, {"type", "seed", "fit", "mask_token", "vocab_size", "embed_dim", "hidden_dim", "command", "endpoint"},
                 "backend");
      const std::string type = b.value("type", "reference");
      if (type == "reference") {
        c.backend.kind = BackendSpec::Kind::kReference;
      } else if (type == "remote") {
        c.backend.kind = BackendSpec::Kind::kRemote;
      } else {
        config_error("backend type must be 'reference' or 'remote', got '" + type + "'");
      }
      c.backend.seed = b.value("seed", c.backend.seed);
      if (b.contains("fit")) {
        if (b["fit"].is_null()) {
          c.backend.fit_epochs = 0;
        } else {
          check_keys(b["fit"], {"epochs", "lr"}, "backend.fit");
          c.backend.fit_epochs = b["fit"].value("epochs", c.backend.fit_epochs);
          c.backend.fit_lr = b["fit"].value("lr", c.backend.fit_lr);
        }
      }
      c.backend.mask_token = b.value("mask_token", c.backend.mask_token);
      c.backend.vocab_size = b.value("vocab_size", c.backend.vocab_size);
      c.backend.embed_dim = b.value("embed_dim", c.backend.embed_dim);
      c.backend.hidden_dim = b.value("hidden_dim", c.backend.hidden_dim);
      c.backend.command = b.value("command", std::string());
      c.backend.endpoint = b.value("endpoint", std::string());
    }
    if (j.contains("dataset")) c.dataset = resolve(base_dir, j["dataset"].get<std::string>());
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& name : j["methods"]) {
        const auto m = method_from_name(name.get<std::string>());
        if (!m) config_error("unknown method '" + name.get<std::string>() + "'; valid: " + method_names_joined());
        c.methods.push_back(*m);
      }
    }
    if (j.contains("metrics")) {
      c.metrics.clear();
      for (const auto& name : j["metrics"]) {
        const auto m = metrics::metric_from_name(name.get<std::string>());
        if (!m) {
          config_error("unknown metric '" + name.get<std::string>() + "'; valid: " + metrics::metric_names_joined());
        }
        c.metrics.push_back(*m);
      }
    }
    if (j.contains("sampling")) {
      const json& s = j["sampling"];
      check_keys(s, {"lime_samples", "lime_kernel_sigma", "lime_ridge_lambda", "shap_budget", "shap_tree",
                     "interaction_budget", "interaction_mode", "ig_steps", "baseline", "soft_samples",
                     "fad_fractions", "tp_thresholds"},
                 "sampling");
      auto& e = c.explain;
      e.lime.n_samples = s.value("lime_samples", e.lime.n_samples);
      e.lime.kernel_sigma = s.value("lime_kernel_sigma", e.lime.kernel_sigma);
      e.lime.ridge_lambda = s.value("lime_ridge_lambda", e.lime.ridge_lambda);
      e.partition.budget = s.value("shap_budget", e.partition.budget);
      const std::string tree = s.value("shap_tree", std::string("balanced"));
      if (tree != "balanced" && tree != "flat") config_error("shap_tree must be 'balanced' or 'flat'");
      e.partition.tree = tree == "flat" ? explain::PartitionTree::kFlat : explain::PartitionTree::kBalanced;
      e.interactions.budget = s.value("interaction_budget", e.interactions.budget);
      const std::string mode = s.value("interaction_mode", std::string("auto"));
      if (mode == "auto") {
        e.interactions.mode = explain::InteractionMode::kAuto;
      } else if (mode == "exact") {
        e.interactions.mode = explain::InteractionMode::kExact;
      } else if (mode == "sampling") {
        e.interactions.mode = explain::InteractionMode::kSampling;
      } else {
        config_error("interaction_mode must be 'auto', 'exact' or 'sampling'");
      }
      e.ig.steps = s.value("ig_steps", e.ig.steps);
      if (s.contains("baseline")) {
        e.baseline = baseline_from_name(s["baseline"].get<std::string>());
        e.ig.baseline = e.baseline;
      }
      c.soft_samples = s.value("soft_samples", c.soft_samples);
      if (s.contains("fad_fractions")) c.fad_fractions = s["fad_fractions"].get<std::vector<double>>();
      if (s.contains("tp_thresholds")) c.tp_thresholds = s["tp_thresholds"].get<std::vector<double>>();
    }
    if (j.contains("plausibility_k") && !j["plausibility_k"].is_null()) c.plausibility_k = j["plausibility_k"].get<int>();
    const std::string target = j.value("target", std::string("predicted"));
    if (target != "predicted" && target != "gold") config_error("target must be 'predicted' or 'gold'");
    c.target = target == "gold" ? TargetPolicy::kGold : TargetPolicy::kPredicted;
    const std::string scope = j.value("sweep_scope", std::string("dataset"));
    if (scope != "dataset" && scope != "instance") config_error("sweep_scope must be 'dataset' or 'instance'");
    c.sweep_scope = scope == "instance" ? metrics::Scope::kInstance : metrics::Scope::kDataset;
    c.max_instances = j.value("max_instances", c.max_instances);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    c.heatmaps = j.value("heatmaps", c.heatmaps);
  } catch (const json::exception& e) {
    config_error(std::string("invalid config value: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    config_error(e.what());
  }
  if (c.methods.empty()) config_error("no methods requested");
  if (c.metrics.empty()) config_error("no metrics requested");
  if (c.workers < 1) config_error("workers must be positive");
  if (c.soft_samples < 1) config_error("soft_samples must be positive");
  if (c.backend.kind == BackendSpec::Kind::kRemote && c.backend.command.empty() == c.backend.endpoint.empty()) {
    config_error("remote backend needs exactly one of 'command' or 'endpoint'");
  }
  return c;
}

BenchmarkConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    config_error("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

json to_json(const BenchmarkConfig& c) {
  json backend;
  if (c.backend.kind == BackendSpec::Kind::kReference) {
    backend = {{"type", "reference"},
               {"seed", c.backend.seed},
               {"fit", c.backend.fit_epochs > 0 ? json{{"epochs", c.backend.fit_epochs}, {"lr", c.backend.fit_lr}}
                                                : json(nullptr)},
               {"mask_token", c.backend.mask_token},
               {"vocab_size", c.backend.vocab_size},
               {"embed_dim", c.backend.embed_dim},
               {"hidden_dim", c.backend.hidden_dim}};
  } else {
    backend = {{"type", "remote"}};
    if (!c.backend.command.empty()) backend["command"] = c.backend.command;
    if (!c.backend.endpoint.empty()) backend["endpoint"] = c.backend.endpoint;
  }
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(method_name(m));
  json ms = json::array();
  for (Metric m : c.metrics) ms.push_back(metrics::metric_name(m));
  const auto& e = c.explain;
  const char* mode = e.interactions.mode == explain::InteractionMode::kAuto    ? "auto"
                     : e.interactions.mode == explain::InteractionMode::kExact ? "exact"
                                                                               : "sampling";
  return {{"backend", backend},
          // Only the file name, so the report does not depend on where it ran.
          {"dataset", c.dataset.filename().string()},
          {"methods", methods},
          {"metrics", ms},
          {"sampling",
           {{"lime_samples", e.lime.n_samples},
            {"lime_kernel_sigma", e.lime.kernel_sigma},
            {"lime_ridge_lambda", e.lime.ridge_lambda},
            {"shap_budget", e.partition.budget},
            {"shap_tree", e.partition.tree == explain::PartitionTree::kFlat ? "flat" : "balanced"},
            {"interaction_budget", e.interactions.budget},
            {"interaction_mode", mode},
            {"ig_steps", e.ig.steps},
            {"baseline", baseline_name(e.baseline)},
            {"soft_samples", c.soft_samples},
            {"fad_fractions", c.fad_fractions},
            {"tp_thresholds", c.tp_thresholds}}},
          {"plausibility_k", c.plausibility_k ? json(*c.plausibility_k) : json(nullptr)},
          {"target", c.target == TargetPolicy::kGold ? "gold" : "predicted"},
          {"sweep_scope", metrics::scope_name(c.sweep_scope)},
          {"max_instances", c.max_instances},
          {"seed", c.seed}};
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec, const data::Dataset& dataset) {
  if (spec.kind == BackendSpec::Kind::kRemote) {
    if (!spec.command.empty()) return protocol::connect_command(spec.command);
    return protocol::connect_url(spec.endpoint);
  }
  ReferenceConfig base;
  base.vocab_size = spec.vocab_size;
  base.embed_dim = spec.embed_dim;
  base.hidden_dim = spec.hidden_dim;
  base.with_mask_token = spec.mask_token;
  return std::make_unique<ReferenceClassifier>(fit_reference(dataset, spec.fit_epochs, spec.fit_lr, spec.seed, base));
}

void validate_capabilities(const Backend& backend, const BenchmarkConfig& config) {
  const BackendInfo& info = backend.info();
  std::vector<std::string> problems;
  for (Method m : config.methods) {
    if (!explain::supports(backend, m)) problems.push_back("method " + method_name(m));
  }
  for (Metric m : config.metrics) {
    const bool ok = needs_embeddings(m) ? info.has(Capability::kEmbeddings)
                    : m == Metric::kAucTp ? info.mask_token_id.has_value() || info.has(Capability::kEmbeddings)
                                          : true;
    if (!ok) problems.push_back("metric " + metrics::metric_name(m));
  }
  if (problems.empty()) return;
  std::string message = "backend cannot run: ";
  for (std::size_t i = 0; i < problems.size(); ++i) message += (i ? ", " : "") + problems[i];
  std::string caps;
  for (Capability c : info.capabilities) caps += (caps.empty() ? "" : ", ") + capability_name(c);
  config_error(message + " (capabilities: " + (caps.empty() ? "none" : caps) + ")");
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config, const Backend& backend, const data::Dataset& dataset) {
  const auto start = Clock::now();
  validate_capabilities(backend, config);
  if (dataset.instances.empty()) fail(ErrorCode::kEmptyDataset, "dataset '" + dataset.name + "' has no instances");
  const std::size_t n = config.max_instances > 0
                            ? std::min<std::size_t>(dataset.instances.size(), static_cast<std::size_t>(config.max_instances))
                            : dataset.instances.size();
  const std::size_t n_methods = config.methods.size();
  const bool instance_sweeps = config.sweep_scope == metrics::Scope::kInstance;
  const std::vector<Metric>& wanted = config.metrics;
  auto wants = [&](Metric m) { return std::find(wanted.begin(), wanted.end(), m) != wanted.end(); };

  std::vector<InstanceOutcome> outcomes(n);
  auto process = [&](std::size_t i) {
    const data::CanonicalInstance& inst = dataset.instances[i];
    InstanceOutcome& out = outcomes[i];
    out.attributions.resize(n_methods);
    out.explain_seconds.assign(n_methods, 0.0);
    try {
      out.seq = backend.tokenize(inst.joined_text());
      if (out.seq.empty()) fail(ErrorCode::kEmptyInput, "instance tokenizes to nothing");
      const auto probs = backend.predict_one(out.seq).probs;
      InstanceRecord rec{inst.id, inst.joined_text(), out.seq.tokens, inst.label, argmax(probs), 0, probs};
      rec.target = config.target == TargetPolicy::kGold ? inst.label : rec.predicted;
      out.record = rec;
    } catch (const std::exception& e) {
      for (Method m : config.methods) out.failures.push_back(make_failure(inst.id, m, std::nullopt, e));
      return;
    }
    const std::uint64_t instance_seed = mix_seed(config.seed, i);
    const auto mask = data::rationale_mask(inst);
    std::optional<data::WordTokenAlignment> alignment;
    for (std::size_t j = 0; j < n_methods; ++j) {
      const Method method = config.methods[j];
      const std::uint64_t seed = mix_seed(instance_seed, static_cast<std::uint64_t>(method));
      explain::ExplainOptions options = config.explain;
      options.lime.seed = mix_seed(seed, 1);
      options.partition.seed = mix_seed(seed, 2);
      options.interactions.seed = mix_seed(seed, 3);
      const auto t0 = Clock::now();
      try {
        Attribution a = explain::explain(method, backend, out.seq, out.record->target, options);
        a.instance_id = inst.id;
        out.attributions[j] = std::move(a);
      } catch (const std::exception& e) {
        out.failures.push_back(make_failure(inst.id, method, std::nullopt, e));
      }
      out.explain_seconds[j] = seconds_since(t0);
      if (!out.attributions[j]) continue;

      const Attribution& a = *out.attributions[j];
      const auto t1 = Clock::now();
      for (Metric metric : wanted) {
        if (is_sweep(metric) && !instance_sweeps) continue;
        try {
          metrics::MetricResult r;
          metrics::SoftOptions soft;
          soft.samples = config.soft_samples;
          soft.seed = mix_seed(seed, 100 + static_cast<std::uint64_t>(metric));
          switch (metric) {
            case Metric::kSoftSufficiency: r = metrics::soft_sufficiency(backend, out.seq, a, soft); break;
            case Metric::kSoftComprehensiveness: r = metrics::soft_comprehensiveness(backend, out.seq, a, soft); break;
            case Metric::kFadNauc: r = metrics::fad_nauc(backend, out.seq, a, config.fad_fractions); break;
            case Metric::kAucTp: r = metrics::auc_tp(backend, out.seq, a, config.tp_thresholds); break;
            case Metric::kComplexity: r = metrics::complexity(a); break;
            case Metric::kSparseness: r = metrics::sparseness(a); break;
            case Metric::kIouF1:
            case Metric::kTokenF1:
            case Metric::kAuprc: {
              if (!mask) fail(ErrorCode::kMissingRationale, "instance has no rationale");
              if (!alignment) alignment = data::build_alignment(out.seq, static_cast<int>(mask->size()));
              const data::WordScores words = data::project(a.scores, *alignment);
              r = metric == Metric::kIouF1    ? metrics::iou_f1(words, *mask, config.plausibility_k)
                  : metric == Metric::kTokenF1 ? metrics::token_f1(words, *mask, config.plausibility_k)
                                               : metrics::auprc(words, *mask);
              break;
            }
          }
          out.results.push_back({inst.id, method, std::move(r)});
        } catch (const std::exception& e) {
          out.failures.push_back(make_failure(inst.id, method, metric, e));
        }
      }
      out.metric_seconds += seconds_since(t1);
    }
  };

  const auto explain_start = Clock::now();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) process(i);
  };
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.workers), n);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  const double explain_wall = seconds_since(explain_start);

  // Merge in instance order so the report does not depend on scheduling.
  BenchmarkReport report;
  report.config = to_json(config);
  report.dataset = {{"name", dataset.name},
                    {"task", data::task_name(dataset.task)},
                    {"label_names", dataset.label_names},
                    {"instances", n}};
  {
    const BackendInfo& info = backend.info();
    json caps = json::array();
    for (Capability c : info.capabilities) caps.push_back(capability_name(c));
    report.backend = {{"n_classes", info.n_classes},
                      {"label_names", info.label_names},
                      {"capabilities", caps},
                      {"native_methods", info.native_methods},
                      {"mask_token_id", info.mask_token_id ? json(*info.mask_token_id) : json(nullptr)},
                      {"embed_dim", info.embed_dim}};
  }
  std::vector<metrics::CellRecord> cells;
  std::map<Method, double> explain_seconds;
  double metric_seconds = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    InstanceOutcome& out = outcomes[i];
    if (out.record) report.instances.push_back(*out.record);
    for (std::size_t j = 0; j < n_methods; ++j) {
      explain_seconds[config.methods[j]] += out.explain_seconds.empty() ? 0.0 : out.explain_seconds[j];
      if (!out.attributions.empty() && out.attributions[j]) report.attributions.push_back(*out.attributions[j]);
    }
    metric_seconds += out.metric_seconds;
    for (auto& r : out.results) {
      cells.push_back({r.method, r.result.metric, r.result, false});
      report.results.push_back(std::move(r));
    }
    for (auto& f : out.failures) {
      if (f.metric) {
        cells.push_back({f.method, *f.metric, std::nullopt, true});
      } else {
        // A failed explanation costs every metric of that method one instance.
        for (Metric m : wanted) cells.push_back({f.method, m, std::nullopt, true});
      }
      report.failures.push_back(std::move(f));
    }
  }

  // Dataset-scope sweeps over the instances each method explained.
  const auto sweep_start = Clock::now();
  if (!instance_sweeps) {
    for (std::size_t j = 0; j < n_methods; ++j) {
      const Method method = config.methods[j];
      std::vector<metrics::SweepItem> items;
      for (std::size_t i = 0; i < n; ++i) {
        const InstanceOutcome& out = outcomes[i];
        if (!out.record || !out.attributions[j]) continue;
        items.push_back({&out.seq, &*out.attributions[j], dataset.instances[i].label});
      }
      for (Metric metric : {Metric::kFadNauc, Metric::kAucTp}) {
        if (!wants(metric)) continue;
        try {
          auto r = metric == Metric::kFadNauc ? metrics::fad_nauc(backend, items, config.fad_fractions)
                                              : metrics::auc_tp(backend, items, config.tp_thresholds);
          r.meta["instances"] = items.size();
          cells.push_back({method, metric, r, false});
          report.results.push_back({"", method, std::move(r)});
        } catch (const std::exception& e) {
          cells.push_back({method, metric, std::nullopt, true});
          report.failures.push_back(make_failure("", method, metric, e));
        }
      }
    }
  }
  report.table = metrics::aggregate(cells, config.methods, config.metrics);

  json per_method = json::object();
  for (const auto& [m, s] : explain_seconds) per_method[method_name(m)] = s;
  report.timings = {{"explain_and_instance_metrics_wall", explain_wall},
                    {"explain_by_method", per_method},
                    {"instance_metrics", metric_seconds},
                    {"dataset_sweeps", seconds_since(sweep_start)},
                    {"total", seconds_since(start)},
                    {"workers", config.workers}};
  return report;
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  const auto t0 = Clock::now();
  if (config.dataset.empty()) config_error("config names no dataset");
  const data::Dataset dataset = data::load_canonical(config.dataset);
  const double load_seconds = seconds_since(t0);
  const auto t1 = Clock::now();
  const auto backend = make_backend(config.backend, dataset);
  const double backend_seconds = seconds_since(t1);
  BenchmarkReport report = run_benchmark(config, *backend, dataset);
  report.timings["load_dataset"] = load_seconds;
  report.timings["backend_setup"] = backend_seconds;
  return report;
}

json to_json(const BenchmarkReport& report) {
  json instances = json::array();
  for (const auto& r : report.instances) {
    instances.push_back({{"id", r.id},
                         {"text", r.text},
                         {"tokens", r.tokens},
                         {"label", r.label},
                         {"predicted", r.predicted},
                         {"target", r.target},
                         {"probs", r.probs}});
  }
  json attributions = json::array();
  for (const auto& a : report.attributions) attributions.push_back(to_json(a));
  json results = json::array();
  for (const auto& r : report.results) {
    json record = metrics::to_json(r.result);
    record["method"] = method_name(r.method);
    record["instance_id"] = r.instance_id.empty() ? json(nullptr) : json(r.instance_id);
    results.push_back(std::move(record));
  }
  json failures = json::array();
  for (const auto& f : report.failures) failures.push_back(failure_json(f));
  return {{"tool", {{"name", "attribench"}, {"version", version()}}},
          {"config", report.config},
          {"dataset", report.dataset},
          {"backend", report.backend},
          {"instances", instances},
          {"attributions", attributions},
          {"results", results},
          {"failures", failures},
          {"table", metrics::to_json(report.table)},
          {"timings_file", "timings.json"}};
}

void write_outputs(const BenchmarkReport& report, const std::filesystem::path& dir, bool heatmaps) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) config_error("cannot create output directory " + dir.string() + ": " + ec.message());
  auto write = [&](const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) config_error("cannot write " + path.string());
    out << content;
  };
  write(dir / "report.json", to_json(report).dump(2) + "\n");
  write(dir / "timings.json", report.timings.dump(2) + "\n");
  write(dir / "table.csv", render_table(report.table, TableFormat::kCsv));
  std::string lines;
  for (const auto& a : report.attributions) lines += to_json(a).dump() + "\n";
  write(dir / "attributions.jsonl", lines);
  if (!heatmaps) return;
  std::filesystem::create_directories(dir / "heatmaps", ec);
  std::map<std::string, std::vector<Attribution>> by_instance;
  for (const auto& a : report.attributions) by_instance[a.instance_id].push_back(a);
  for (std::size_t i = 0; i < report.instances.size(); ++i) {
    const auto& inst = report.instances[i];
    const auto it = by_instance.find(inst.id);
    if (it == by_instance.end()) continue;
    char prefix[16];
    std::snprintf(prefix, sizeof(prefix), "%03zu_", i);
    write(dir / "heatmaps" / (prefix + safe_file_stem(inst.id) + ".html"),
          render_heatmap_html(inst.id, inst.tokens, it->second));
  }
}

std::string heat_color(double v) {
  v = std::clamp(v, -1.0, 1.0);
  const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(v))));
  int r = 255, g = fade, b = fade;
  if (v < 0) {
    r = fade;
    b = 255;
  }
  return "rgb(" + std::to_string(r) + "," + std::to_string(g) + "," + std::to_string(b) + ")";
}

std::string render_heatmap_html(const std::string& title, const std::vector<std::string>& tokens,
                                 const std::vector<Attribution>& attributions) {
  if (attributions.empty()) fail(ErrorCode::kInvalidArgument, "heatmap needs at least one attribution");
  for (const auto& a : attributions) {
    if (a.scores.size() != tokens.size() || (!a.token_texts.empty() && a.token_texts != tokens)) {
      fail(ErrorCode::kAlignmentError, method_name(a.method) + " attribution does not match the instance tokens");
    }
  }
  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" << html_escape(title) << "</title>\n"
       << "<style>body{font-family:sans-serif}table{border-collapse:collapse}"
          "th{text-align:right;padding:2px 8px;font-weight:normal}"
          "td.tok{padding:2px 4px;border:1px solid #ddd}</style></head>\n<body>\n"
       << "<h1>" << html_escape(title) << "</h1>\n<table class=\"heatmap\">\n";
  for (const auto& a : attributions) {
    double scale = 0.0;
    for (double s : a.scores) scale = std::max(scale, std::abs(s));
    html << "<tr class=\"method-row\"><th>" << html_escape(method_name(a.method)) << "</th>";
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const double v = scale > 0.0 ? a.scores[i] / scale : 0.0;
      char score[32];
      std::snprintf(score, sizeof(score), "%.4g", a.scores[i]);
      html << "<td class=\"tok\" style=\"background:" << heat_color(v) << "\" title=\"" << score << "\">"
           << html_escape(tokens[i]) << "</td>";
    }
    html << "</tr>\n";
  }
  html << "</table>\n<p>Red is positive, blue is negative; each row is scaled to its largest |score|.</p>\n"
       << "</body></html>\n";
  return html.str();
}

TableFormat table_format_from_name(const std::string& name) {
  if (name == "text") return TableFormat::kText;
  if (name == "csv") return TableFormat::kCsv;
  if (name == "json") return TableFormat::kJson;
  fail(ErrorCode::kInvalidArgument, "table format must be text, csv or json, got '" + name + "'");
}

std::string render_table(const metrics::MetricTable& table, TableFormat format) {
  if (format == TableFormat::kJson) return metrics::to_json(table).dump(2) + "\n";
  std::ostringstream out;
  if (format == TableFormat::kCsv) {
    out << "method";
    for (Metric m : table.metrics) out << "," << metrics::metric_name(m) << "," << metrics::metric_name(m) << "_best";
    out << "\n";
    for (Method method : table.methods) {
      out << method_name(method);
      for (Metric m : table.metrics) {
        const auto& cell = table.at(method, m);
        out << "," << (cell.value ? json(*cell.value).dump() : std::string()) << "," << (cell.best ? 1 : 0);
      }
      out << "\n";
    }
    return out.str();
  }
  std::vector<std::string> header = {"method"};
  for (Metric m : table.metrics) {
    header.push_back(metrics::metric_name(m) + " " + metrics::direction_arrow(metrics::direction_of(m)));
  }
  std::vector<std::vector<std::string>> rows;
  for (Method method : table.methods) {
    std::vector<std::string> row = {method_name(method)};
    for (Metric m : table.metrics) {
      const auto& cell = table.at(method, m);
      std::string text = cell.value ? format_value(*cell.value) : "n/a";
      if (cell.best) text += "*";
      if (cell.errors > 0) text += " (" + std::to_string(cell.errors) + " err)";
      row.push_back(text);
    }
    rows.push_back(row);
  }
  // Display width counts code points so the arrows line up.
  auto width = [](const std::string& s) {
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
  };
  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    widths[c] = width(header[c]);
    for (const auto& row : rows) widths[c] = std::max(widths[c], width(row[c]));
  }
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << (c ? "  " : "") << row[c] << std::string(widths[c] - width(row[c]), ' ');
    }
    out << "\n";
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  const auto sweeper = table.sweeping_method();
  out << "* best per metric. Method best on every metric: " << (sweeper ? method_name(*sweeper) : "none") << "\n";
  return out.str();
}

}  // namespace attribench::bench
