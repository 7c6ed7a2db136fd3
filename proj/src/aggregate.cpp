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

#include "attribench/aggregate.hpp"

#include <algorithm>

#include "attribench/errors.hpp"

namespace attribench::metrics {

const TableCell& MetricTable::at(Method method, Metric metric) const {
  auto it = cells.find({method, metric});
  if (it == cells.end()) {
    fail(ErrorCode::kInvalidArgument, "no cell for " + method_name(method) + " x " + metric_name(metric));
  }
  return it->second;
}

std::vector<Method> MetricTable::best_methods(Metric metric) const {
  std::vector<Method> out;
  for (Method m : methods) {
    if (at(m, metric).best) out.push_back(m);
  }
  return out;
}

std::optional<Method> MetricTable::sweeping_method() const {
  for (Method m : methods) {
    bool sweeps = true;
    bool any = false;
    for (Metric metric : metrics) {
      const TableCell& cell = at(m, metric);
      if (!cell.value) continue;
      any = true;
      sweeps = sweeps && cell.best;
    }
    if (any && sweeps) return m;
  }
  return std::nullopt;
}

MetricTable aggregate(const std::vector<CellRecord>& records, const std::vector<Method>& methods,
                      const std::vector<Metric>& metrics) {
  MetricTable table;
  table.methods = methods;
  table.metrics = metrics;
  std::sort(table.methods.begin(), table.methods.end());
  std::sort(table.metrics.begin(), table.metrics.end());
  struct Accumulator {
    double sum = 0.0;
    int count = 0;
    int errors = 0;
    std::optional<Scope> scope;
  };
  std::map<std::pair<Method, Metric>, Accumulator> acc;
  for (Method m : table.methods)
    for (Metric k : table.metrics) acc[{m, k}];
  for (const auto& r : records) {
    auto it = acc.find({r.method, r.metric});
    if (it == acc.end()) continue;
    Accumulator& a = it->second;
    if (r.failed || !r.result) {
      a.errors += r.failed ? 1 : 0;
      continue;
    }
    if (a.scope && *a.scope != r.result->scope) {
      fail(ErrorCode::kInconsistentScopes, "cell " + method_name(r.method) + " x " + metric_name(r.metric) +
                                               " mixes instance and dataset scopes");
    }
    a.scope = r.result->scope;
    a.sum += r.result->value;
    ++a.count;
  }
  for (const auto& [key, a] : acc) {
    TableCell cell;
    cell.count = a.count;
    cell.errors = a.errors;
    if (a.count > 0) cell.value = a.sum / a.count;
    table.cells[key] = cell;
  }
  for (Metric k : table.metrics) {
    std::optional<double> best;
    const bool lower = direction_of(k) == Direction::kLowerBetter;
    for (Method m : table.methods) {
      const auto& v = table.cells[{m, k}].value;
      if (!v) continue;
      if (!best || (lower ? *v < *best : *v > *best)) best = v;
    }
    for (Method m : table.methods) {
      TableCell& cell = table.cells[{m, k}];
      cell.best = best && cell.value && *cell.value == *best;
    }
  }
  return table;
}

nlohmann::json to_json(const MetricTable& table) {
  nlohmann::json out;
  std::vector<std::string> methods;
  std::vector<std::string> metrics;
  for (Method m : table.methods) methods.push_back(method_name(m));
  for (Metric k : table.metrics) metrics.push_back(metric_name(k));
  out["methods"] = methods;
  out["metrics"] = metrics;
  nlohmann::json cells = nlohmann::json::object();
  nlohmann::json best = nlohmann::json::object();
  nlohmann::json directions = nlohmann::json::object();
  for (Metric k : table.metrics) {
    directions[metric_name(k)] = direction_name(direction_of(k));
    std::vector<std::string> winners;
    for (Method m : table.best_methods(k)) winners.push_back(method_name(m));
    best[metric_name(k)] = winners;
  }
  for (Method m : table.methods) {
    nlohmann::json row = nlohmann::json::object();
    for (Metric k : table.metrics) {
      const TableCell& c = table.at(m, k);
      row[metric_name(k)] = {{"value", c.value ? nlohmann::json(*c.value) : nlohmann::json(nullptr)},
                             {"n", c.count},
                             {"errors", c.errors},
                             {"best", c.best}};
    }
    cells[method_name(m)] = row;
  }
  out["cells"] = cells;
  out["best"] = best;
  out["directions"] = directions;
  const auto sweeper = table.sweeping_method();
  out["swept_all"] = sweeper ? nlohmann::json(method_name(*sweeper)) : nlohmann::json(nullptr);
  return out;
}

MetricTable table_from_json(const nlohmann::json& json) {
  MetricTable table;
  try {
    for (const auto& name : json.at("methods")) {
      auto m = method_from_name(name.get<std::string>());
      if (!m) fail(ErrorCode::kParseError, "unknown method in table");
      table.methods.push_back(*m);
    }
    for (const auto& name : json.at("metrics")) {
      auto k = metric_from_name(name.get<std::string>());
      if (!k) fail(ErrorCode::kParseError, "unknown metric in table");
      table.metrics.push_back(*k);
    }
    for (Method m : table.methods) {
      for (Metric k : table.metrics) {
        const auto& c = json.at("cells").at(method_name(m)).at(metric_name(k));
        TableCell cell;
        if (!c.at("value").is_null()) cell.value = c.at("value").get<double>();
        cell.count = c.at("n").get<int>();
        cell.errors = c.at("errors").get<int>();
        cell.best = c.at("best").get<bool>();
        table.cells[{m, k}] = cell;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParseError, std::string("metric table: ") + e.what());
  }
  return table;
}

}  // namespace attribench::metrics
