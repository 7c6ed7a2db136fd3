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

// Python bindings. Structured values cross the boundary as JSON text and are
// decoded by the pure-Python wrapper in attribench/__init__.py.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "attribench/aggregate.hpp"
#include "attribench/alignment.hpp"
#include "attribench/bench.hpp"
#include "attribench/datasets.hpp"
#include "attribench/errors.hpp"
#include "attribench/explainers.hpp"
#include "attribench/metrics.hpp"
#include "attribench/protocol.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace attribench {
namespace {

std::unique_ptr<Backend> build_backend(const std::optional<std::string>& command,
                                       const std::optional<std::string>& url,
                                       const std::optional<std::string>& fit_on, std::uint64_t model_seed) {
  if (command) return protocol::connect_command(*command);
  if (url) return protocol::connect_url(*url);
  bench::BackendSpec spec;
  spec.seed = model_seed;
  data::Dataset dataset;
  if (fit_on) {
    dataset = data::load_canonical(*fit_on);
  } else {
    dataset.label_names = {"0", "1"};
    spec.fit_epochs = 0;
  }
  return bench::make_backend(spec, dataset);
}

std::string explain_json(const std::string& text, const std::vector<std::string>& method_names,
                         std::optional<int> target, std::uint64_t seed, const std::optional<std::string>& fit_on,
                         std::uint64_t model_seed, const std::optional<std::string>& command,
                         const std::optional<std::string>& url) {
  std::vector<Method> methods;
  for (const auto& name : method_names) {
    const auto m = method_from_name(name);
    if (!m) fail(ErrorCode::kInvalidArgument, "unknown method '" + name + "'; valid methods: " + method_names_joined());
    methods.push_back(*m);
  }
  py::gil_scoped_release release;
  const auto backend = build_backend(command, url, fit_on, model_seed);
  const TokenSequence seq = backend->tokenize(text);
  if (seq.empty()) fail(ErrorCode::kEmptyInput, "input has no tokens");
  const auto probs = backend->predict_one(seq).probs;
  const int cls =
      target.value_or(static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin()));
  explain::ExplainOptions options;
  options.lime.seed = seed;
  options.partition.seed = seed;
  options.interactions.seed = seed;
  json out = json::array();
  for (Method m : methods) {
    Attribution a = explain::explain(m, *backend, seq, cls, options);
    a.instance_id = "input";
    out.push_back(to_json(a));
  }
  return out.dump();
}

std::string run_benchmark_json(const std::string& config_path, const std::optional<std::string>& output_dir,
                               std::optional<int> workers, std::optional<bool> heatmaps) {
  bench::BenchmarkConfig config = bench::load_config(config_path);
  if (output_dir) config.output_dir = *output_dir;
  if (workers) config.workers = *workers;
  if (heatmaps) config.heatmaps = *heatmaps;
  py::gil_scoped_release release;
  const auto report = bench::run_benchmark(config);
  if (output_dir) bench::write_outputs(report, config.output_dir, config.heatmaps);
  return bench::to_json(report).dump();
}

data::RationaleMask mask_of(const std::vector<int>& gold) {
  data::RationaleMask mask;
  mask.flags = gold;
  mask.excluded.assign(gold.size(), false);
  return mask;
}

Attribution attribution_of(const std::vector<double>& scores) {
  Attribution a;
  a.scores = scores;
  a.token_texts.assign(scores.size(), "");
  return a;
}

}  // namespace
}  // namespace attribench

PYBIND11_MODULE(_core, m) {
  using namespace attribench;
  m.doc() = "attribench native core";

  // Raised as attribench.AttribenchError(code, message, row).
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object cls = py::module_::import("attribench._errors").attr("AttribenchError");
      const py::object row = e.row() ? py::object(py::int_(*e.row())) : py::object(py::none());
      PyErr_SetObject(cls.ptr(), py::make_tuple(error_code_name(e.code()), e.what(), row).ptr());
    }
  });

  m.def("version", &bench::version);
  m.def("method_names", [] {
    std::vector<std::string> out;
    for (Method x : kAllMethods) out.push_back(method_name(x));
    return out;
  });
  m.def("metric_names", [] {
    std::vector<std::string> out;
    for (metrics::Metric x : metrics::kAllMetrics) out.push_back(metrics::metric_name(x));
    return out;
  });
  m.def("explain_json", &explain_json, py::arg("text"), py::arg("methods"), py::arg("target") = py::none(),
        py::arg("seed") = 0, py::arg("fit_on") = py::none(), py::arg("model_seed") = 0,
        py::arg("command") = py::none(), py::arg("url") = py::none());
  m.def("run_benchmark_json", &run_benchmark_json, py::arg("config_path"), py::arg("output_dir") = py::none(),
        py::arg("workers") = py::none(), py::arg("heatmaps") = py::none());
  m.def("load_dataset_jsonl", [](const std::string& path) { return data::serialize_canonical(data::load_canonical(path)); });
  m.def("render_table", [](const std::string& table_json, const std::string& format) {
    return bench::render_table(metrics::table_from_json(json::parse(table_json)), bench::table_format_from_name(format));
  });
  m.def("complexity", [](const std::vector<double>& s) { return metrics::complexity(attribution_of(s)).value; });
  m.def("sparseness", [](const std::vector<double>& s) { return metrics::sparseness(attribution_of(s)).value; });
  m.def("auprc", [](const std::vector<double>& s, const std::vector<int>& gold) {
    return metrics::auprc(data::WordScores{s}, mask_of(gold)).value;
  });
  m.def("token_f1", [](const std::vector<double>& s, const std::vector<int>& gold, std::optional<int> k) {
    return metrics::token_f1(data::WordScores{s}, mask_of(gold), k).value;
  }, py::arg("scores"), py::arg("gold"), py::arg("k") = py::none());
  m.def("iou_f1", [](const std::vector<double>& s, const std::vector<int>& gold, std::optional<int> k) {
    return metrics::iou_f1(data::WordScores{s}, mask_of(gold), k).value;
  }, py::arg("scores"), py::arg("gold"), py::arg("k") = py::none());
}
