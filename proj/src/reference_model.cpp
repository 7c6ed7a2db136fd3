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

#include "attribench/reference_model.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "attribench/datasets.hpp"
#include "attribench/errors.hpp"
#include "attribench/rng.hpp"

namespace attribench {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string normalize_word(std::string_view word) {
  std::string lower(word);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::size_t begin = 0;
  std::size_t end = lower.size();
  while (begin < end && std::ispunct(static_cast<unsigned char>(lower[begin]))) ++begin;
  while (end > begin && std::ispunct(static_cast<unsigned char>(lower[end - 1]))) --end;
  if (begin == end) return lower;  // all punctuation: keep as-is
  return lower.substr(begin, end - begin);
}

Vector softmax(const Vector& logits) {
  const double top = logits.maxCoeff();
  Vector e = (logits.array() - top).exp();
  return e / e.sum();
}

ProbabilityVector to_probs(const Vector& logits) {
  Vector p = softmax(logits);
  return {std::vector<double>(p.data(), p.data() + p.size())};
}

std::vector<std::string> default_labels(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(std::to_string(i));
  return out;
}

BackendInfo make_info(const ReferenceConfig& config) {
  BackendInfo info;
  info.n_classes = config.n_classes;
  info.label_names = config.label_names;
  if (config.with_mask_token) info.mask_token_id = 0;
  info.capabilities = {Capability::kGradients, Capability::kEmbeddings};
  info.embed_dim = config.embed_dim;
  return info;
}

ReferenceConfig checked(ReferenceConfig config) {
  if (config.vocab_size < 2 || config.embed_dim < 1 || config.hidden_dim < 1 ||
      config.n_classes < 1) {
    fail(ErrorCode::kInvalidArgument, "reference model shape must be positive");
  }
  if (config.label_names.empty()) config.label_names = default_labels(config.n_classes);
  if (static_cast<int>(config.label_names.size()) != config.n_classes) {
    fail(ErrorCode::kInvariantViolation, "label_names must have n_classes entries");
  }
  return config;
}

}  // namespace

TokenSequence reference_tokenize(std::string_view text, int vocab_size,
                                 bool with_mask_token) {
  TokenSequence seq;
  seq.text = std::string(text);
  std::istringstream in{std::string(text)};
  std::string word;
  int index = 0;
  while (in >> word) {
    std::string token = normalize_word(word);
    const std::uint64_t h = fnv1a(token);
    const std::int64_t id =
        with_mask_token
            ? 1 + static_cast<std::int64_t>(h % static_cast<std::uint64_t>(vocab_size - 1))
            : static_cast<std::int64_t>(h % static_cast<std::uint64_t>(vocab_size));
    seq.tokens.push_back(std::move(token));
    seq.ids.push_back(id);
    seq.word_map.push_back(index++);
  }
  if (seq.empty()) fail(ErrorCode::kEmptyInput, "text has no tokens");
  return seq;
}

ReferenceParams init_reference_params(const ReferenceConfig& config) {
  Rng rng(config.seed);
  ReferenceParams p;
  auto fill = [&rng](Matrix& m, double scale) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = scale * rng.normal();
  };
  p.embedding.resize(config.vocab_size, config.embed_dim);
  p.w1.resize(config.embed_dim, config.hidden_dim);
  p.w2.resize(config.hidden_dim, config.n_classes);
  fill(p.embedding, 1.0);
  fill(p.w1, 1.0 / std::sqrt(static_cast<double>(config.embed_dim)));
  fill(p.w2, 1.0 / std::sqrt(static_cast<double>(config.hidden_dim)));
  p.b1 = Vector::Zero(config.hidden_dim);
  p.b2 = Vector::Zero(config.n_classes);
  if (config.with_mask_token) p.embedding.row(0).setZero();
  return p;
}

ReferenceClassifier::ReferenceClassifier(ReferenceConfig config)
    : config_(checked(std::move(config))),
      params_(init_reference_params(config_)),
      info_(make_info(config_)) {}

ReferenceClassifier::ReferenceClassifier(ReferenceConfig config,
                                         ReferenceParams params)
    : config_(checked(std::move(config))),
      params_(std::move(params)),
      info_(make_info(config_)) {
  const auto& c = config_;
  const auto& p = params_;
  if (p.embedding.rows() != c.vocab_size || p.embedding.cols() != c.embed_dim ||
      p.w1.rows() != c.embed_dim || p.w1.cols() != c.hidden_dim ||
      p.b1.size() != c.hidden_dim || p.w2.rows() != c.hidden_dim ||
      p.w2.cols() != c.n_classes || p.b2.size() != c.n_classes) {
    fail(ErrorCode::kDimensionMismatch, "reference parameters do not match config");
  }
}

TokenSequence ReferenceClassifier::tokenize(std::string_view text) const {
  return reference_tokenize(text, config_.vocab_size, config_.with_mask_token);
}

EmbeddingMatrix ReferenceClassifier::embed(const TokenSequence& seq) const {
  if (seq.empty()) fail(ErrorCode::kEmptyInput, "cannot embed an empty sequence");
  EmbeddingMatrix rows(static_cast<Eigen::Index>(seq.size()), config_.embed_dim);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto id = seq.ids[i];
    if (id < 0 || id >= config_.vocab_size) {
      fail(ErrorCode::kInvalidArgument, "token id " + std::to_string(id) + " out of vocabulary");
    }
    rows.row(static_cast<Eigen::Index>(i)) = params_.embedding.row(id);
  }
  return rows;
}

void ReferenceClassifier::check_rows(const EmbeddingMatrix& rows) const {
  if (rows.rows() == 0) fail(ErrorCode::kEmptyInput, "embedding matrix has no rows");
  if (rows.cols() != config_.embed_dim) {
    fail(ErrorCode::kDimensionMismatch,
         "embedding width " + std::to_string(rows.cols()) + " != model width " +
             std::to_string(config_.embed_dim));
  }
}

ReferenceActivations ReferenceClassifier::forward(const EmbeddingMatrix& rows) const {
  check_rows(rows);
  ReferenceActivations a;
  a.pooled = rows.colwise().mean().transpose();
  a.hidden_pre = params_.w1.transpose() * a.pooled + params_.b1;
  a.hidden = a.hidden_pre.cwiseMax(0.0);
  a.logits = params_.w2.transpose() * a.hidden + params_.b2;
  return a;
}

std::vector<ProbabilityVector> ReferenceClassifier::predict(
    std::span<const TokenSequence> batch) const {
  if (batch.empty()) fail(ErrorCode::kEmptyInput, "predict needs a non-empty batch");
  std::vector<ProbabilityVector> out;
  out.reserve(batch.size());
  for (const auto& seq : batch) out.push_back(to_probs(forward(embed(seq)).logits));
  return out;
}

std::vector<ModelOutput> ReferenceClassifier::predict_embeddings(
    std::span<const EmbeddingMatrix> batch) const {
  std::vector<ModelOutput> out;
  out.reserve(batch.size());
  for (const auto& rows : batch) {
    const Vector logits = forward(rows).logits;
    out.push_back({to_probs(logits),
                   std::vector<double>(logits.data(), logits.data() + logits.size())});
  }
  return out;
}

Matrix ReferenceClassifier::gradient_wrt_embeddings(const EmbeddingMatrix& rows,
                                                    int target) const {
  if (target < 0 || target >= config_.n_classes) {
    fail(ErrorCode::kInvalidArgument, "target class out of range");
  }
  const ReferenceActivations a = forward(rows);
  const Vector grad_pre =
      params_.w2.col(target).cwiseProduct((a.hidden_pre.array() > 0.0).cast<double>().matrix());
  const Vector grad_pooled = params_.w1 * grad_pre;
  Matrix grad(rows.rows(), rows.cols());
  const double inv_n = 1.0 / static_cast<double>(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) grad.row(i) = grad_pooled.transpose() * inv_n;
  return grad;
}

namespace {

struct EncodedExample {
  std::vector<std::int64_t> ids;
  int label;
};

std::vector<EncodedExample> encode(const ReferenceClassifier& model,
                                   const data::Dataset& dataset) {
  std::vector<EncodedExample> out;
  const int n_classes = model.config().n_classes;
  for (std::size_t r = 0; r < dataset.instances.size(); ++r) {
    const auto& inst = dataset.instances[r];
    if (inst.label < 0 || inst.label >= n_classes) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  "instance '" + inst.id + "' label " + std::to_string(inst.label) +
                      " outside [0, " + std::to_string(n_classes) + ")",
                  static_cast<int>(r) + 1);
    }
    out.push_back({model.tokenize(inst.joined_text()).ids, inst.label});
  }
  return out;
}

Matrix rows_of(const ReferenceParams& p, const std::vector<std::int64_t>& ids) {
  Matrix rows(static_cast<Eigen::Index>(ids.size()), p.embedding.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) rows.row(static_cast<Eigen::Index>(i)) = p.embedding.row(ids[i]);
  return rows;
}

}  // namespace

double reference_loss(const ReferenceClassifier& model, const data::Dataset& dataset) {
  const auto examples = encode(model, dataset);
  if (examples.empty()) fail(ErrorCode::kEmptyDataset, "dataset has no instances");
  double loss = 0.0;
  for (const auto& ex : examples) {
    const Vector p = softmax(model.forward(rows_of(model.params(), ex.ids)).logits);
    loss -= std::log(std::max(p(ex.label), 1e-300));
  }
  return loss / static_cast<double>(examples.size());
}

ReferenceClassifier fit_reference(const data::Dataset& dataset, int epochs,
                                  double lr, std::uint64_t seed,
                                  ReferenceConfig base) {
  base.seed = seed;
  base.n_classes = static_cast<int>(dataset.label_names.size());
  base.label_names = dataset.label_names;
  ReferenceClassifier model(base);
  const auto examples = encode(model, dataset);
  if (examples.empty() || epochs <= 0) return model;

  ReferenceParams& p = model.mutable_params();
  const double scale = 1.0 / static_cast<double>(examples.size());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Matrix d_embedding = Matrix::Zero(p.embedding.rows(), p.embedding.cols());
    Matrix d_w1 = Matrix::Zero(p.w1.rows(), p.w1.cols());
    Vector d_b1 = Vector::Zero(p.b1.size());
    Matrix d_w2 = Matrix::Zero(p.w2.rows(), p.w2.cols());
    Vector d_b2 = Vector::Zero(p.b2.size());
    for (const auto& ex : examples) {
      const ReferenceActivations a = model.forward(rows_of(p, ex.ids));
      Vector d_logits = softmax(a.logits);
      d_logits(ex.label) -= 1.0;
      d_logits *= scale;
      d_w2 += a.hidden * d_logits.transpose();
      d_b2 += d_logits;
      const Vector d_pre = (p.w2 * d_logits).cwiseProduct(
          (a.hidden_pre.array() > 0.0).cast<double>().matrix());
      d_w1 += a.pooled * d_pre.transpose();
      d_b1 += d_pre;
      const Vector d_pooled = p.w1 * d_pre / static_cast<double>(ex.ids.size());
      for (auto id : ex.ids) d_embedding.row(id) += d_pooled.transpose();
    }
    p.embedding -= lr * d_embedding;
    p.w1 -= lr * d_w1;
    p.b1 -= lr * d_b1;
    p.w2 -= lr * d_w2;
    p.b2 -= lr * d_b2;
  }
  return model;
}

}  // namespace attribench
