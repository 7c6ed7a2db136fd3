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

#ifndef ATTRIBENCH_DATASETS_HPP_
#define ATTRIBENCH_DATASETS_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace attribench::data {

enum class Task { kSentiment, kHateSpeech, kNli };

std::string task_name(Task task);
Task task_from_name(const std::string& name);

// Separator word placed between premise and hypothesis of NLI pairs.
inline constexpr const char* kPairSeparator = "[SEP]";

struct CanonicalInstance {
  std::string id;
  std::string text;
  std::optional<std::pair<std::string, std::string>> text_pair;
  int label = 0;
  // One flag per whitespace word of joined_text().
  std::optional<std::vector<int>> rationale;

  // text, or premise + " [SEP] " + hypothesis for pairs.
  std::string joined_text() const;
  std::vector<std::string> words() const;
};

struct Dataset {
  std::string name;
  Task task = Task::kSentiment;
  std::vector<std::string> label_names;
  std::vector<CanonicalInstance> instances;

  // Throws kInvariantViolation; the row is the 1-based instance index.
  void validate() const;
};

std::vector<std::string> split_words(const std::string& text);

// Canonical JSONL: a header record {"type": "header", "name", "task",
// "labels"} followed by one instance per line. Errors carry 1-based instance
// row numbers (the header is row 0).
Dataset load_canonical(const std::filesystem::path& path);
Dataset parse_canonical(const std::string& content);
std::string serialize_canonical(const Dataset& dataset);
void write_canonical(const Dataset& dataset, const std::filesystem::path& path);

// MovieReviews in the ERASER layout: <dir>/docs/<docid> holds the review and
// every <dir>/*.jsonl annotation line is
//   {"annotation_id", "classification": "POS"|"NEG",
//    "evidences": [[{"docid", "start_token", "end_token"} |
//                   {"docid", "start_char", "end_char"}]]}
// Token offsets index whitespace words; character offsets mark every word
// they overlap.
Dataset convert_movies(const std::filesystem::path& raw_dir);

// HateXplain dataset.json: {post_id: {"post_tokens", "annotators":
// [{"label"}], "rationales": [[0/1 per token], ...]}}. Label and rationale are
// both majority votes; posts without a label majority are skipped.
Dataset convert_hatexplain(const std::filesystem::path& raw_file);

// e-SNLI CSV with columns gold_label, Sentence1, Sentence2,
// Sentence1_marked_1, Sentence2_marked_1 (highlighted words wrapped in '*').
Dataset convert_esnli(const std::filesystem::path& raw_file);

}  // namespace attribench::data

#endif  // ATTRIBENCH_DATASETS_HPP_
