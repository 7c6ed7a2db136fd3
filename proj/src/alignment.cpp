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

#include "attribench/alignment.hpp"

#include <algorithm>

#include "attribench/errors.hpp"

namespace attribench::data {

int RationaleMask::positives() const {
  return static_cast<int>(std::count(flags.begin(), flags.end(), 1));
}

WordTokenAlignment build_alignment(const TokenSequence& seq, int n_words) {
  WordTokenAlignment alignment;
  alignment.word_to_tokens.resize(n_words);
  int max_word = -1;
  for (std::size_t t = 0; t < seq.word_map.size(); ++t) {
    const auto& w = seq.word_map[t];
    if (!w) continue;
    if (*w >= n_words) {
      fail(ErrorCode::kAlignmentError,
           "token " + std::to_string(t) + " maps to word " + std::to_string(*w) +
               " but the text has " + std::to_string(n_words) + " words");
    }
    alignment.word_to_tokens[*w].push_back(static_cast<int>(t));
    max_word = std::max(max_word, *w);
  }
  if (max_word + 1 != n_words) {
    fail(ErrorCode::kAlignmentError,
         "tokenization covers " + std::to_string(max_word + 1) + " words, text has " +
             std::to_string(n_words));
  }
  return alignment;
}

std::vector<int> align(const std::vector<int>& word_rationale, const TokenSequence& seq) {
  const auto alignment = build_alignment(seq, static_cast<int>(word_rationale.size()));
  std::vector<int> mask(seq.size(), 0);
  for (std::size_t w = 0; w < word_rationale.size(); ++w) {
    if (!word_rationale[w]) continue;
    for (int t : alignment.word_to_tokens[w]) mask[t] = 1;
  }
  return mask;
}

WordScores project(const std::vector<double>& token_scores, const WordTokenAlignment& alignment) {
  WordScores out;
  out.values.assign(alignment.n_words(), 0.0);
  for (std::size_t w = 0; w < alignment.n_words(); ++w) {
    for (int t : alignment.word_to_tokens[w]) {
      if (t < 0 || static_cast<std::size_t>(t) >= token_scores.size()) {
        fail(ErrorCode::kAlignmentError, "alignment references a token without a score");
      }
      out.values[w] += token_scores[t];
    }
  }
  return out;
}

std::optional<RationaleMask> rationale_mask(const CanonicalInstance& instance) {
  if (!instance.rationale) return std::nullopt;
  RationaleMask mask;
  mask.flags = *instance.rationale;
  mask.excluded.assign(mask.flags.size(), false);
  if (instance.text_pair) {
    const auto separator = split_words(instance.text_pair->first).size();
    if (separator < mask.excluded.size()) mask.excluded[separator] = true;
  }
  return mask;
}

}  // namespace attribench::data
