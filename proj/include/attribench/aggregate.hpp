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

#ifndef ATTRIBENCH_AGGREGATE_HPP_
#define ATTRIBENCH_AGGREGATE_HPP_

#include <map>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "attribench/attribution.hpp"
#include "attribench/metrics.hpp"

namespace attribench::metrics {

// A scored value, or an error, for one (method, metric, instance).
struct CellRecord {
  Method method = Method::kSaliency;
  Metric metric = Metric::kComplexity;
  std::optional<MetricResult> result;
  bool failed = false;
};

struct TableCell {
  std::optional<double> value;  // mean over scored records
  int count = 0;
  int errors = 0;
  bool best = false;
};

// Rows are methods, columns metrics, both in canonical enum order.
struct MetricTable {
  std::vector<Method> methods;
  std::vector<Metric> metrics;
  std::map<std::pair<Method, Metric>, TableCell> cells;

  const TableCell& at(Method method, Metric metric) const;
  // Methods holding the best value of a metric.
  std::vector<Method> best_methods(Metric metric) const;
  // A method that is best on every metric with a value, if any.
  std::optional<Method> sweeping_method() const;
};

// Unweighted mean per (method, metric). Instance- and dataset-scope values in
// one cell raise kInconsistentScopes. Best cells respect metric direction;
// exact ties are all marked.
MetricTable aggregate(const std::vector<CellRecord>& records,
                      const std::vector<Method>& methods,
                      const std::vector<Metric>& metrics);

nlohmann::json to_json(const MetricTable& table);
MetricTable table_from_json(const nlohmann::json& json);

}  // namespace attribench::metrics

#endif  // ATTRIBENCH_AGGREGATE_HPP_
