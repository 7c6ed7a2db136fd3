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

#include "attribench/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "attribench/errors.hpp"

namespace attribench::data {
namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kParseError, "cannot open " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

[[noreturn]] void row_error(ErrorCode code, int row, const std::string& what) {
  throw Error(code, "row " + std::to_string(row) + ": " + what, row);
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

int label_index(const std::vector<std::string>& labels, const std::string& name) {
  auto it = std::find(labels.begin(), labels.end(), name);
  if (it == labels.end()) fail(ErrorCode::kUnknownLabel, "unknown label '" + name + "'");
  return static_cast<int>(it - labels.begin());
}

std::optional<std::vector<int>> nonzero_or_empty(std::vector<int> flags) {
  if (std::none_of(flags.begin(), flags.end(), [](int f) { return f != 0; })) {
    return std::nullopt;
  }
  return flags;
}

// RFC 4180 reader: quoted fields may contain separators, doubled quotes and
// newlines.
std::vector<std::vector<std::string>> parse_csv(const std::string& content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
      if (field_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      field_started = false;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) fail(ErrorCode::kParseError, "unterminated quoted CSV field");
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string task_name(Task task) {
  switch (task) {
    case Task::kSentiment: return "sentiment";
    case Task::kHateSpeech: return "hate_speech";
    case Task::kNli: return "nli";
  }
  return "sentiment";
}

Task task_from_name(const std::string& name) {
  for (auto t : {Task::kSentiment, Task::kHateSpeech, Task::kNli}) {
    if (task_name(t) == name) return t;
  }
  fail(ErrorCode::kParseError, "unknown task '" + name + "'");
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(std::move(w));
  return words;
}

std::string CanonicalInstance::joined_text() const {
  if (text_pair) return text_pair->first + " " + kPairSeparator + " " + text_pair->second;
  return text;
}

std::vector<std::string> CanonicalInstance::words() const {
  return split_words(joined_text());
}

void Dataset::validate() const {
  if (label_names.empty()) fail(ErrorCode::kInvariantViolation, "dataset has no labels");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const int row = static_cast<int>(i) + 1;
    const auto& inst = instances[i];
    if (inst.id.empty()) row_error(ErrorCode::kInvariantViolation, row, "empty id");
    if (!seen.insert(inst.id).second) {
      row_error(ErrorCode::kInvariantViolation, row, "duplicate id '" + inst.id + "'");
    }
    if (inst.label < 0 || inst.label >= static_cast<int>(label_names.size())) {
      row_error(ErrorCode::kInvariantViolation, row,
                "label " + std::to_string(inst.label) + " outside label map");
    }
    const auto n_words = inst.words().size();
    if (n_words == 0) row_error(ErrorCode::kInvariantViolation, row, "empty text");
    if (inst.rationale) {
      if (inst.rationale->size() != n_words) {
        row_error(ErrorCode::kInvariantViolation, row,
                  "rationale length " + std::to_string(inst.rationale->size()) +
                      " != word count " + std::to_string(n_words));
      }
      for (int f : *inst.rationale) {
        if (f != 0 && f != 1) row_error(ErrorCode::kInvariantViolation, row, "rationale entries must be 0 or 1");
      }
    }
  }
}

Dataset parse_canonical(const std::string& content) {
  Dataset ds;
  std::istringstream in(content);
  std::string line;
  bool have_header = false;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      row_error(ErrorCode::kParseError, have_header ? row + 1 : 0, e.what());
    }
    if (!have_header) {
      if (!record.is_object() || record.value("type", "") != "header") {
        row_error(ErrorCode::kParseError, 0, "first record must be the header");
      }
      try {
        ds.name = record.at("name").get<std::string>();
        ds.task = task_from_name(record.at("task").get<std::string>());
        ds.label_names = record.at("labels").get<std::vector<std::string>>();
      } catch (const json::exception& e) {
        row_error(ErrorCode::kParseError, 0, e.what());
      }
      have_header = true;
      continue;
    }
    ++row;
    CanonicalInstance inst;
    try {
      inst.id = record.at("id").get<std::string>();
      if (record.contains("premise") || record.contains("hypothesis")) {
        inst.text_pair.emplace(record.at("premise").get<std::string>(),
                               record.at("hypothesis").get<std::string>());
      } else {
        inst.text = record.at("text").get<std::string>();
      }
      const json& label = record.at("label");
      if (label.is_string()) {
        inst.label = label_index(ds.label_names, label.get<std::string>());
      } else {
        inst.label = label.get<int>();
      }
      if (record.contains("rationale") && !record["rationale"].is_null()) {
        inst.rationale = record["rationale"].get<std::vector<int>>();
      }
    } catch (const json::exception& e) {
      row_error(ErrorCode::kParseError, row, e.what());
    } catch (const Error& e) {
      row_error(e.code(), row, e.what());
    }
    ds.instances.push_back(std::move(inst));
  }
  if (!have_header) fail(ErrorCode::kParseError, "missing header record");
  ds.validate();
  return ds;
}

Dataset load_canonical(const std::filesystem::path& path) {
  return parse_canonical(read_file(path));
}

std::string serialize_canonical(const Dataset& dataset) {
  std::string out;
  json header = {{"type", "header"},
                 {"name", dataset.name},
                 {"task", task_name(dataset.task)},
                 {"labels", dataset.label_names}};
  out += header.dump() + "\n";
  for (const auto& inst : dataset.instances) {
    json r;
    r["id"] = inst.id;
    if (inst.text_pair) {
      r["premise"] = inst.text_pair->first;
      r["hypothesis"] = inst.text_pair->second;
    } else {
      r["text"] = inst.text;
    }
    r["label"] = inst.label;
    if (inst.rationale) r["rationale"] = *inst.rationale;
    out += r.dump() + "\n";
  }
  return out;
}

void write_canonical(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kConfigError, "cannot write " + path.string());
  out << serialize_canonical(dataset);
}

Dataset convert_movies(const std::filesystem::path& raw_dir) {
  Dataset ds;
  ds.name = "movie_reviews";
  ds.task = Task::kSentiment;
  ds.label_names = {"NEG", "POS"};
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(raw_dir)) {
    fail(ErrorCode::kParseError, raw_dir.string() + " is not a directory");
  }
  for (const auto& entry : std::filesystem::directory_iterator(raw_dir)) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorCode::kParseError, "no annotation .jsonl files in " + raw_dir.string());

  for (const auto& file : files) {
    std::istringstream in(read_file(file));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = file.filename().string() + ":" + std::to_string(line_no);
      json record;
      try {
        record = json::parse(line);
      } catch (const json::exception& e) {
        fail(ErrorCode::kParseError, where + ": " + e.what());
      }
      CanonicalInstance inst;
      std::vector<json> evidences;
      std::string docid;
      try {
        inst.id = record.at("annotation_id").get<std::string>();
        std::string label = record.at("classification").get<std::string>();
        std::transform(label.begin(), label.end(), label.begin(), ::toupper);
        inst.label = label_index(ds.label_names, label);
        docid = record.value("docid", inst.id);
        for (const auto& group : record.value("evidences", json::array())) {
          if (group.is_array()) {
            for (const auto& ev : group) evidences.push_back(ev);
          } else {
            evidences.push_back(group);
          }
        }
      } catch (const json::exception& e) {
        fail(ErrorCode::kParseError, where + ": " + e.what());
      }
      for (const auto& ev : evidences) {
        if (ev.contains("docid")) docid = ev["docid"].get<std::string>();
      }
      const std::string raw = read_file(raw_dir / "docs" / docid);
      // Character spans of whitespace words in the raw document.
      std::vector<std::pair<std::size_t, std::size_t>> spans;
      std::vector<std::string> words;
      for (std::size_t i = 0; i < raw.size();) {
        while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
        if (i >= raw.size()) break;
        std::size_t j = i;
        while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
        spans.emplace_back(i, j);
        words.push_back(raw.substr(i, j - i));
        i = j;
      }
      if (words.empty()) fail(ErrorCode::kParseError, where + ": document '" + docid + "' is empty");
      inst.text = join(words);
      std::vector<int> flags(words.size(), 0);
      for (const auto& ev : evidences) {
        if (ev.contains("start_token")) {
          const auto begin = ev.at("start_token").get<std::size_t>();
          const auto end = ev.at("end_token").get<std::size_t>();
          if (end > words.size() || begin > end) {
            fail(ErrorCode::kParseError, where + ": evidence token span out of range");
          }
          for (auto k = begin; k < end; ++k) flags[k] = 1;
        } else if (ev.contains("start_char")) {
          const auto begin = ev.at("start_char").get<std::size_t>();
          const auto end = ev.at("end_char").get<std::size_t>();
          if (end > raw.size() || begin > end) {
            fail(ErrorCode::kParseError, where + ": evidence character span out of range");
          }
          for (std::size_t k = 0; k < spans.size(); ++k) {
            if (spans[k].first < end && begin < spans[k].second) flags[k] = 1;
          }
        } else {
          fail(ErrorCode::kParseError, where + ": evidence needs token or character offsets");
        }
      }
      inst.rationale = nonzero_or_empty(std::move(flags));
      ds.instances.push_back(std::move(inst));
    }
  }
  ds.validate();
  return ds;
}

Dataset convert_hatexplain(const std::filesystem::path& raw_file) {
  Dataset ds;
  ds.name = "hatexplain";
  ds.task = Task::kHateSpeech;
  ds.label_names = {"hatespeech", "normal", "offensive"};
  json root;
  try {
    root = json::parse(read_file(raw_file));
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, raw_file.string() + ": " + e.what());
  }
  if (!root.is_object()) fail(ErrorCode::kParseError, "HateXplain file must be an object keyed by post id");
  for (const auto& [key, post] : root.items()) {
    CanonicalInstance inst;
    try {
      inst.id = post.value("post_id", key);
      const auto tokens = post.at("post_tokens").get<std::vector<std::string>>();
      std::map<std::string, int> votes;
      int n_annotators = 0;
      for (const auto& a : post.at("annotators")) {
        const std::string label = a.at("label").get<std::string>();
        label_index(ds.label_names, label);
        ++votes[label];
        ++n_annotators;
      }
      std::optional<std::string> winner;
      for (const auto& [label, count] : votes) {
        if (2 * count > n_annotators) winner = label;
      }
      if (!winner) continue;  // no majority label
      inst.label = label_index(ds.label_names, *winner);

      std::vector<std::string> kept;
      std::vector<std::size_t> kept_index;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!split_words(tokens[i]).empty()) {
          kept.push_back(tokens[i]);
          kept_index.push_back(i);
        }
      }
      inst.text = join(kept);
      const auto masks = post.value("rationales", json::array()).get<std::vector<std::vector<int>>>();
      if (!masks.empty()) {
        std::vector<int> merged(kept.size(), 0);
        for (std::size_t w = 0; w < kept.size(); ++w) {
          int marked = 0;
          for (const auto& m : masks) {
            if (m.size() != tokens.size()) {
              fail(ErrorCode::kParseError, "post '" + inst.id + "': rationale length != token count");
            }
            marked += m[kept_index[w]] != 0 ? 1 : 0;
          }
          merged[w] = 2 * marked > static_cast<int>(masks.size()) ? 1 : 0;
        }
        inst.rationale = nonzero_or_empty(std::move(merged));
      }
    } catch (const json::exception& e) {
      fail(ErrorCode::kParseError, "post '" + key + "': " + e.what());
    }
    ds.instances.push_back(std::move(inst));
  }
  ds.validate();
  return ds;
}

Dataset convert_esnli(const std::filesystem::path& raw_file) {
  Dataset ds;
  ds.name = "esnli";
  ds.task = Task::kNli;
  ds.label_names = {"entailment", "neutral", "contradiction"};
  const auto rows = parse_csv(read_file(raw_file));
  if (rows.empty()) fail(ErrorCode::kParseError, "empty e-SNLI file");
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < rows[0].size(); ++i) column[rows[0][i]] = i;
  for (const char* required : {"gold_label", "Sentence1", "Sentence2"}) {
    if (!column.count(required)) fail(ErrorCode::kParseError, std::string("missing column ") + required);
  }
  auto cell = [&](const std::vector<std::string>& row, const std::string& name) -> std::string {
    auto it = column.find(name);
    if (it == column.end() || it->second >= row.size()) return {};
    return row[it->second];
  };
  // Strips '*' highlight markers; returns words and flags.
  auto marked_words = [](const std::string& marked, const std::string& plain) {
    std::vector<std::string> words;
    std::vector<int> flags;
    const std::string& source = marked.empty() ? plain : marked;
    for (auto w : split_words(source)) {
      const bool hit = w.find('*') != std::string::npos;
      w.erase(std::remove(w.begin(), w.end(), '*'), w.end());
      if (w.empty()) continue;
      words.push_back(std::move(w));
      flags.push_back(hit ? 1 : 0);
    }
    return std::make_pair(words, flags);
  };
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    CanonicalInstance inst;
    inst.id = cell(row, "pairID");
    if (inst.id.empty()) inst.id = "row" + std::to_string(r);
    inst.label = label_index(ds.label_names, cell(row, "gold_label"));
    auto [premise, p_flags] = marked_words(cell(row, "Sentence1_marked_1"), cell(row, "Sentence1"));
    auto [hypothesis, h_flags] = marked_words(cell(row, "Sentence2_marked_1"), cell(row, "Sentence2"));
    if (premise.empty() || hypothesis.empty()) {
      fail(ErrorCode::kParseError, "row " + std::to_string(r) + ": empty sentence");
    }
    inst.text_pair.emplace(join(premise), join(hypothesis));
    std::vector<int> flags = p_flags;
    flags.push_back(0);  // separator
    flags.insert(flags.end(), h_flags.begin(), h_flags.end());
    inst.rationale = nonzero_or_empty(std::move(flags));
    ds.instances.push_back(std::move(inst));
  }
  ds.validate();
  return ds;
}

}  // namespace attribench::data
