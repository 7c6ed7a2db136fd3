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

#include <cmath>

#include "attribench/errors.hpp"
#include "attribench/explainers.hpp"
#include "attribench/reference_model.hpp"

namespace attribench::explain {
namespace {

Attribution make_attribution(const TokenSequence& seq, Method method, int target,
                             std::vector<double> scores, nlohmann::json meta = nlohmann::json::object()) {
  Attribution a;
  a.method = method;
  a.target_class = target;
  a.scores = std::move(scores);
  a.token_texts = seq.tokens;
  a.meta = std::move(meta);
  a.validate();
  return a;
}

void check_target(const Backend& backend, int target) {
  if (target < 0 || target >= backend.info().n_classes) {
    fail(ErrorCode::kInvalidArgument, "target class " + std::to_string(target) + " out of range");
  }
}

void require_gradients(const Backend& backend, const char* method) {
  backend.require(Capability::kEmbeddings, method);
  backend.require(Capability::kGradients, method);
}

BaselineKind resolve(const Backend& backend, BaselineKind kind) {
  if (kind != BaselineKind::kDefault) return kind;
  return backend.info().mask_token_id ? BaselineKind::kMaskToken : BaselineKind::kZeroEmbeddings;
}

std::vector<double> row_norms(const Matrix& m) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[i] = m.row(i).norm();
  return out;
}

std::vector<double> row_dots(const Matrix& a, const Matrix& b) {
  std::vector<double> out(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) out[i] = a.row(i).dot(b.row(i));
  return out;
}

std::vector<double> served_natively(const Backend& backend, const std::string& name,
                                    const TokenSequence& seq, int target, BaselineKind baseline) {
  auto scores = backend.native_attribution(name, seq, target, baseline);
  if (scores.size() != seq.size()) {
    fail(ErrorCode::kAlignmentError, "native " + name + " returned " + std::to_string(scores.size()) +
                                         " scores for " + std::to_string(seq.size()) + " tokens");
  }
  return scores;
}

}  // namespace

EmbeddingMatrix baseline_embeddings(const Backend& backend, const TokenSequence& seq,
                                    BaselineKind kind) {
  kind = resolve(backend, kind);
  if (kind == BaselineKind::kMaskToken) {
    const auto& info = backend.info();
    if (!info.mask_token_id) fail(ErrorCode::kCapabilityMissing, "mask_token baseline needs a mask token");
    return backend.embed(seq.with_replaced(std::vector<bool>(seq.size(), true), *info.mask_token_id,
                                           info.mask_token));
  }
  const EmbeddingMatrix rows = backend.embed(seq);
  return EmbeddingMatrix::Zero(rows.rows(), rows.cols());
}

Attribution saliency(const Backend& backend, const TokenSequence& seq, int target) {
  require_gradients(backend, "saliency");
  check_target(backend, target);
  const Matrix grad = backend.gradient_wrt_embeddings(backend.embed(seq), target);
  return make_attribution(seq, Method::kSaliency, target, row_norms(grad));
}

Attribution gradient_x_input(const Backend& backend, const TokenSequence& seq, int target) {
  require_gradients(backend, "gradient_x_input");
  check_target(backend, target);
  const EmbeddingMatrix rows = backend.embed(seq);
  const Matrix grad = backend.gradient_wrt_embeddings(rows, target);
  return make_attribution(seq, Method::kGradientXInput, target, row_dots(grad, rows));
}

Attribution integrated_gradients(const Backend& backend, const TokenSequence& seq, int target,
                                 const IntegratedGradientsOptions& options) {
  require_gradients(backend, "integrated_gradients");
  check_target(backend, target);
  if (options.steps < 2) fail(ErrorCode::kInvalidArgument, "integrated_gradients needs steps >= 2");
  const BaselineKind kind = resolve(backend, options.baseline);
  const EmbeddingMatrix input = backend.embed(seq);
  const EmbeddingMatrix base = baseline_embeddings(backend, seq, kind);
  const Matrix delta = input - base;

  // Trapezoidal rule on alpha_k = k / (steps - 1).
  const int intervals = options.steps - 1;
  Matrix avg_grad = Matrix::Zero(input.rows(), input.cols());
  for (int k = 0; k <= intervals; ++k) {
    const double alpha = static_cast<double>(k) / intervals;
    const double weight = (k == 0 || k == intervals ? 0.5 : 1.0) / intervals;
    avg_grad += weight * backend.gradient_wrt_embeddings(base + alpha * delta, target);
  }
  return make_attribution(seq, Method::kIntegratedGradients, target, row_dots(avg_grad, delta),
                          {{"steps", options.steps}, {"baseline", baseline_name(kind)}});
}

Attribution deeplift(const Backend& backend, const TokenSequence& seq, int target,
                     BaselineKind baseline) {
  check_target(backend, target);
  const BaselineKind kind = resolve(backend, baseline);
  const nlohmann::json meta = {{"baseline", baseline_name(kind)}, {"rule", "rescale"}};
  const ReferenceClassifier* model = backend.reference_model();
  if (model == nullptr) {
    if (!backend.info().serves_native("deeplift")) {
      fail(ErrorCode::kCapabilityMissing, "deeplift needs ReLU internals or native support");
    }
    return make_attribution(seq, Method::kDeepLift, target,
                            served_natively(backend, "deeplift", seq, target, kind), meta);
  }
  const ReferenceParams& p = model->params();
  const EmbeddingMatrix input = model->embed(seq);
  const EmbeddingMatrix base = baseline_embeddings(backend, seq, kind);
  const ReferenceActivations at_input = model->forward(input);
  const ReferenceActivations at_base = model->forward(base);

  // Multipliers of the target logit, propagated layer by layer. Linear layers
  // pass multipliers through their weights; the ReLU uses delta-out/delta-in,
  // falling back to the local gradient when delta-in vanishes.
  const Vector m_hidden = p.w2.col(target);
  Vector m_pre(m_hidden.size());
  for (Eigen::Index j = 0; j < m_hidden.size(); ++j) {
    const double d_in = at_input.hidden_pre(j) - at_base.hidden_pre(j);
    const double d_out = at_input.hidden(j) - at_base.hidden(j);
    const double slope = std::abs(d_in) > 1e-12 ? d_out / d_in : (at_input.hidden_pre(j) > 0.0 ? 1.0 : 0.0);
    m_pre(j) = m_hidden(j) * slope;
  }
  const Vector m_pooled = p.w1 * m_pre;
  const double inv_n = 1.0 / static_cast<double>(input.rows());
  std::vector<double> scores(seq.size());
  for (Eigen::Index i = 0; i < input.rows(); ++i) {
    scores[i] = (input.row(i) - base.row(i)).dot(m_pooled.transpose()) * inv_n;
  }
  return make_attribution(seq, Method::kDeepLift, target, std::move(scores), meta);
}

Attribution guided_backprop(const Backend& backend, const TokenSequence& seq, int target) {
  check_target(backend, target);
  const ReferenceClassifier* model = backend.reference_model();
  if (model == nullptr) {
    if (!backend.info().serves_native("guided_backprop")) {
      fail(ErrorCode::kCapabilityMissing, "guided_backprop needs ReLU internals or native support");
    }
    return make_attribution(seq, Method::kGuidedBackprop, target,
                            served_natively(backend, "guided_backprop", seq, target, BaselineKind::kDefault));
  }
  const ReferenceParams& p = model->params();
  const EmbeddingMatrix input = model->embed(seq);
  const ReferenceActivations a = model->forward(input);
  const Vector incoming = p.w2.col(target);
  Vector guided(incoming.size());
  for (Eigen::Index j = 0; j < incoming.size(); ++j) {
    guided(j) = (a.hidden_pre(j) > 0.0 && incoming(j) > 0.0) ? incoming(j) : 0.0;
  }
  const Vector g_pooled = p.w1 * guided;
  const double row_norm = g_pooled.norm() / static_cast<double>(input.rows());
  return make_attribution(seq, Method::kGuidedBackprop, target,
                          std::vector<double>(seq.size(), row_norm));
}

}  // namespace attribench::explain
