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

#ifndef ATTRIBENCH_ALIGNMENT_HPP_
#define ATTRIBENCH_ALIGNMENT_HPP_

#include <vector>

#include "attribench/datasets.hpp"
#include "attribench/types.hpp"

namespace attribench::data {

// Word-level importance; the only score type plausibility metrics accept.
struct WordScores {
  std::vector<double> values;
};

// Word-level gold rationale. excluded[i] marks words that can never be
// selected (the NLI separator).
struct RationaleMask {
  std::vector<int> flags;
  std::vector<bool> excluded;

  std::size_t size() const { return flags.size(); }
  int positives() const;
};

struct WordTokenAlignment {
  std::vector<std::vector<int>> word_to_tokens;

  std::size_t n_words() const { return word_to_tokens.size(); }
};

// Throws kAlignmentError when the sequence's word map does not cover exactly
// n_words words.
WordTokenAlignment build_alignment(const TokenSequence& seq, int n_words);

// Every token of a rationale word is marked.
std::vector<int> align(const std::vector<int>& word_rationale,
                       const TokenSequence& seq);

// Word score = sum of signed token scores; special tokens dropped.
WordScores project(const std::vector<double>& token_scores,
                   const WordTokenAlignment& alignment);

// Rationale of an instance with the separator excluded; nullopt when absent.
std::optional<RationaleMask> rationale_mask(const CanonicalInstance& instance);

}  // namespace attribench::data

#endif  // ATTRIBENCH_ALIGNMENT_HPP_
