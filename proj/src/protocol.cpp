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

#include "attribench/protocol.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "attribench/errors.hpp"
#include "http.hpp"

namespace attribench::protocol {
namespace {

[[noreturn]] void bad_request(const std::string& message) { fail(ErrorCode::kInvalidArgument, message); }

const json& param(const json& params, const char* key) {
  if (!params.is_object() || !params.contains(key)) bad_request(std::string("missing parameter '") + key + "'");
  return params.at(key);
}

int target_param(const json& params, const Backend& backend) {
  const json& t = param(params, "target");
  if (!t.is_number_integer()) bad_request("target must be an integer");
  const int target = t.get<int>();
  if (target < 0 || target >= backend.info().n_classes) {
    fail(ErrorCode::kLabelOutOfRange, "target " + std::to_string(target) + " outside [0, n_classes)");
  }
  return target;
}

json dispatch(const Backend& backend, const std::string& op, const json& params) {
  if (op == "info") return encode(backend.info());
  if (op == "tokenize") {
    const json& text = param(params, "text");
    if (!text.is_string()) bad_request("text must be a string");
    return encode(backend.tokenize(text.get<std::string>()));
  }
  if (op == "predict") {
    std::vector<TokenSequence> batch;
    for (const auto& s : param(params, "batch")) batch.push_back(decode_sequence(s));
    if (batch.empty()) bad_request("empty batch");
    json probs = json::array();
    for (const auto& p : backend.predict(batch)) probs.push_back(p.probs);
    return {{"probs", probs}};
  }
  if (op == "embed") {
    backend.require(Capability::kEmbeddings, "embed");
    return {{"embeddings", encode(backend.embed(decode_sequence(param(params, "sequence"))))}};
  }
  if (op == "predict_embeds") {
    backend.require(Capability::kEmbeddings, "predict_embeds");
    std::vector<EmbeddingMatrix> batch;
    for (const auto& m : param(params, "batch")) batch.push_back(decode_matrix(m));
    if (batch.empty()) bad_request("empty batch");
    json probs = json::array();
    json logits = json::array();
    for (const auto& out : backend.predict_embeddings(batch)) {
      probs.push_back(out.probs.probs);
      logits.push_back(out.logits);
    }
    return {{"probs", probs}, {"logits", logits}};
  }
  if (op == "grad_embeds") {
    backend.require(Capability::kGradients, "grad_embeds");
    const Matrix rows = decode_matrix(param(params, "embeddings"));
    return {{"gradients", encode(backend.gradient_wrt_embeddings(rows, target_param(params, backend)))}};
  }
  if (op == "native_attribution") {
    backend.require(Capability::kNativeAttribution, "native_attribution");
    const std::string method = param(params, "method").get<std::string>();
    if (!backend.info().serves_native(method)) {
      fail(ErrorCode::kCapabilityMissing, "native method '" + method + "' is not served");
    }
    const TokenSequence seq = decode_sequence(param(params, "sequence"));
    const BaselineKind baseline = baseline_from_name(params.value("baseline", std::string("default")));
    const auto scores = backend.native_attribution(method, seq, target_param(params, backend), baseline);
    return {{"scores", scores}, {"tokens", seq.tokens}};
  }
  bad_request("unknown op '" + op + "'");
}

void check_response(const json& response, const json& expected_id) {
  if (!response.is_object() || !response.contains("id")) {
    fail(ErrorCode::kProtocolError, "response is not an object with an id");
  }
  if (response["id"] != expected_id) {
    fail(ErrorCode::kProtocolError,
         "response id " + response["id"].dump() + " does not match request id " + expected_id.dump());
  }
  if (response.contains("error")) {
    const json& err = response["error"];
    const std::string code = err.value("code", "INTERNAL");
    const std::string message = err.value("message", "");
    throw Error(error_code_from_name(code), "remote " + code + ": " + message);
  }
  if (!response.contains("result")) fail(ErrorCode::kProtocolError, "response has neither result nor error");
}

std::vector<double> finite_vector(const json& value, const char* what) {
  if (!value.is_array()) fail(ErrorCode::kProtocolError, std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(value.size());
  for (const auto& x : value) {
    if (!x.is_number() || !std::isfinite(x.get<double>())) {
      fail(ErrorCode::kProtocolError, std::string(what) + " must hold finite numbers");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

json encode(const TokenSequence& seq) {
  json word_map = json::array();
  for (const auto& w : seq.word_map) word_map.push_back(w ? json(*w) : json(nullptr));
  return {{"text", seq.text}, {"tokens", seq.tokens}, {"ids", seq.ids}, {"word_map", word_map}};
}

TokenSequence decode_sequence(const json& value) {
  if (!value.is_object()) bad_request("sequence must be an object");
  TokenSequence seq;
  try {
    seq.text = value.value("text", std::string());
    seq.tokens = value.at("tokens").get<std::vector<std::string>>();
    seq.ids = value.at("ids").get<std::vector<std::int64_t>>();
    if (value.contains("word_map")) {
      for (const auto& w : value["word_map"]) {
        seq.word_map.push_back(w.is_null() ? std::nullopt : std::optional<int>(w.get<int>()));
      }
    } else {
      for (std::size_t i = 0; i < seq.tokens.size(); ++i) seq.word_map.push_back(static_cast<int>(i));
    }
  } catch (const json::exception& e) {
    bad_request(std::string("malformed sequence: ") + e.what());
  }
  seq.validate();
  return seq;
}

json encode(const Matrix& matrix) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) row.push_back(matrix(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix decode_matrix(const json& value) {
  if (!value.is_array() || value.empty() || !value[0].is_array()) {
    bad_request("matrix must be a non-empty array of rows");
  }
  const auto cols = value[0].size();
  Matrix m(static_cast<Eigen::Index>(value.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!value[i].is_array() || value[i].size() != cols) {
      fail(ErrorCode::kDimensionMismatch, "matrix rows differ in length");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      const json& x = value[i][j];
      if (!x.is_number() || !std::isfinite(x.get<double>())) bad_request("matrix entries must be finite numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x.get<double>();
    }
  }
  return m;
}

json encode(const BackendInfo& info) {
  json caps = json::array();
  for (Capability c : info.capabilities) caps.push_back(capability_name(c));
  return {{"n_classes", info.n_classes},
          {"label_names", info.label_names},
          {"mask_token_id", info.mask_token_id ? json(*info.mask_token_id) : json(nullptr)},
          {"mask_token", info.mask_token},
          {"capabilities", caps},
          {"native_methods", info.native_methods},
          {"max_length", info.max_length ? json(*info.max_length) : json(nullptr)},
          {"embed_dim", info.embed_dim}};
}

BackendInfo decode_info(const json& value) {
  BackendInfo info;
  try {
    info.n_classes = value.at("n_classes").get<int>();
    info.label_names = value.at("label_names").get<std::vector<std::string>>();
    if (value.contains("mask_token_id") && !value["mask_token_id"].is_null()) {
      info.mask_token_id = value["mask_token_id"].get<std::int64_t>();
    }
    info.mask_token = value.value("mask_token", std::string("[MASK]"));
    for (const auto& c : value.value("capabilities", json::array())) {
      // Capabilities this engine does not know about are ignored.
      if (auto cap = capability_from_name(c.get<std::string>())) info.capabilities.push_back(*cap);
    }
    info.native_methods = value.value("native_methods", std::vector<std::string>{});
    if (value.contains("max_length") && !value["max_length"].is_null()) {
      info.max_length = value["max_length"].get<int>();
    }
    info.embed_dim = value.value("embed_dim", 0);
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocolError, std::string("malformed info response: ") + e.what());
  }
  if (info.n_classes <= 0 || static_cast<int>(info.label_names.size()) != info.n_classes) {
    fail(ErrorCode::kProtocolError, "info: label_names must have n_classes entries");
  }
  return info;
}

json error_response(const json& id, ErrorCode code, const std::string& message) {
  return {{"id", id}, {"error", {{"code", std::string(error_code_name(code))}, {"message", message}}}};
}

json handle_request(const Backend& backend, const json& request) {
  const json id = request.is_object() && request.contains("id") ? request["id"] : json(nullptr);
  if (!request.is_object() || !request.contains("op") || !request["op"].is_string()) {
    return error_response(id, ErrorCode::kInvalidArgument, "request needs a string 'op'");
  }
  const json params = request.value("params", json::object());
  try {
    return {{"id", id}, {"result", dispatch(backend, request["op"].get<std::string>(), params)}};
  } catch (const Error& e) {
    return error_response(id, e.code(), e.what());
  } catch (const json::exception& e) {
    return error_response(id, ErrorCode::kInvalidArgument, e.what());
  } catch (const std::exception& e) {
    return error_response(id, ErrorCode::kInternal, e.what());
  }
}

void serve(const Backend& backend, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json response;
    try {
      response = handle_request(backend, json::parse(line));
    } catch (const json::parse_error& e) {
      response = error_response(nullptr, ErrorCode::kInvalidArgument, std::string("invalid JSON: ") + e.what());
    }
    out << response.dump() << '\n';
    out.flush();
  }
}

json LoopbackTransport::round_trip(const json& request) {
  const json parsed = json::parse(request.dump());
  return json::parse(handle_request(backend_, parsed).dump());
}

PipeTransport::PipeTransport(const std::string& command, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
    fail(ErrorCode::kBackendUnavailable, std::string("pipe: ") + std::strerror(errno));
  }
  pid_ = fork();
  if (pid_ < 0) fail(ErrorCode::kBackendUnavailable, std::string("fork: ") + std::strerror(errno));
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  // A dead child must surface as an error, not kill us on write.
  signal(SIGPIPE, SIG_IGN);
}

PipeTransport::~PipeTransport() {
  if (to_child_ >= 0) close(to_child_);  // end of input asks the server to exit
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; !broken_ && i < 200; ++i) {
      if (waitpid(pid_, &status, WNOHANG) != 0) return;
      usleep(10000);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
  }
}

std::string PipeTransport::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    const auto newline = pending_.find('\n');
    if (newline != std::string::npos) {
      std::string line = pending_.substr(0, newline);
      pending_.erase(0, newline + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) fail(ErrorCode::kTimeout, "backend process did not answer in time");
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) fail(ErrorCode::kTimeout, "backend process did not answer in time");
    char buffer[65536];
    const ssize_t got = read(from_child_, buffer, sizeof(buffer));
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) fail(ErrorCode::kBackendUnavailable, "backend process closed its output");
    pending_.append(buffer, static_cast<std::size_t>(got));
  }
}

json PipeTransport::round_trip(const json& request) {
  if (broken_) fail(ErrorCode::kBackendUnavailable, "backend process connection was lost earlier");
  // Any failure below leaves the stream unusable.
  broken_ = true;
  const std::string line = request.dump() + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = write(to_child_, line.data() + written, line.size() - written);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) fail(ErrorCode::kBackendUnavailable, "backend process is not accepting input");
    written += static_cast<std::size_t>(n);
  }
  const std::string reply = read_line();
  broken_ = false;
  try {
    return json::parse(reply);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kProtocolError, std::string("backend sent invalid JSON: ") + e.what());
  }
}

HttpTransport::HttpTransport(std::string url, std::chrono::milliseconds timeout)
    : url_(std::move(url)), timeout_(timeout) {}

json HttpTransport::round_trip(const json& request) {
  const auto outcome = internal::http_post(url_, request.dump(), {}, timeout_);
  if (!outcome.ok) {
    fail(outcome.timed_out ? ErrorCode::kTimeout : ErrorCode::kBackendUnavailable,
         "backend at " + url_ + " unreachable: " + outcome.error);
  }
  try {
    return json::parse(outcome.body);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kProtocolError, "HTTP " + std::to_string(outcome.status) + " with invalid JSON body");
  }
}

RemoteBackend::RemoteBackend(std::unique_ptr<Transport> transport) : transport_(std::move(transport)) {
  info_ = decode_info(call("info", json::object()));
}

int RemoteBackend::requests() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return next_id_ - 1;
}

json RemoteBackend::call(const std::string& op, json params) const {
  std::lock_guard<std::mutex> lock(mutex_);
  const json id = next_id_++;
  const json response = transport_->round_trip({{"id", id}, {"op", op}, {"params", std::move(params)}});
  check_response(response, id);
  return response["result"];
}

TokenSequence RemoteBackend::tokenize(std::string_view text) const {
  const json result = call("tokenize", {{"text", std::string(text)}});
  try {
    TokenSequence seq = decode_sequence(result);
    if (seq.text.empty()) seq.text = std::string(text);
    return seq;
  } catch (const Error& e) {
    fail(ErrorCode::kProtocolError, std::string("tokenize: ") + e.what());
  }
}

std::vector<ProbabilityVector> RemoteBackend::predict(std::span<const TokenSequence> batch) const {
  json sequences = json::array();
  for (const auto& s : batch) sequences.push_back(encode(s));
  const json result = call("predict", {{"batch", sequences}});
  const json& probs = result.value("probs", json());
  if (!probs.is_array() || probs.size() != batch.size()) {
    fail(ErrorCode::kProtocolError, "predict returned the wrong number of rows");
  }
  std::vector<ProbabilityVector> out;
  for (const auto& row : probs) {
    ProbabilityVector p{finite_vector(row, "probs")};
    if (static_cast<int>(p.size()) != info_.n_classes) fail(ErrorCode::kProtocolError, "probs row has wrong width");
    out.push_back(std::move(p));
  }
  return out;
}

EmbeddingMatrix RemoteBackend::embed(const TokenSequence& seq) const {
  require(Capability::kEmbeddings, "embed");
  if (seq.empty()) fail(ErrorCode::kEmptyInput, "embed of an empty sequence");
  const json result = call("embed", {{"sequence", encode(seq)}});
  Matrix m;
  try {
    m = decode_matrix(result.at("embeddings"));
  } catch (const std::exception& e) {
    fail(ErrorCode::kProtocolError, std::string("embed: ") + e.what());
  }
  if (static_cast<std::size_t>(m.rows()) != seq.size()) {
    fail(ErrorCode::kProtocolError, "embed returned the wrong number of rows");
  }
  return m;
}

std::vector<ModelOutput> RemoteBackend::predict_embeddings(std::span<const EmbeddingMatrix> batch) const {
  require(Capability::kEmbeddings, "predict_embeddings");
  json matrices = json::array();
  for (const auto& m : batch) matrices.push_back(encode(m));
  const json result = call("predict_embeds", {{"batch", matrices}});
  const json& probs = result.value("probs", json());
  const json& logits = result.value("logits", json());
  if (!probs.is_array() || probs.size() != batch.size() || !logits.is_array() || logits.size() != batch.size()) {
    fail(ErrorCode::kProtocolError, "predict_embeds returned the wrong number of rows");
  }
  std::vector<ModelOutput> out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.push_back({ProbabilityVector{finite_vector(probs[i], "probs")}, finite_vector(logits[i], "logits")});
  }
  return out;
}

Matrix RemoteBackend::gradient_wrt_embeddings(const EmbeddingMatrix& rows, int target) const {
  require(Capability::kGradients, "gradient_wrt_embeddings");
  const json result = call("grad_embeds", {{"embeddings", encode(rows)}, {"target", target}});
  Matrix g;
  try {
    g = decode_matrix(result.at("gradients"));
  } catch (const std::exception& e) {
    fail(ErrorCode::kProtocolError, std::string("grad_embeds: ") + e.what());
  }
  if (g.rows() != rows.rows() || g.cols() != rows.cols()) {
    fail(ErrorCode::kProtocolError, "grad_embeds returned a matrix of the wrong shape");
  }
  return g;
}

std::vector<double> RemoteBackend::native_attribution(const std::string& method, const TokenSequence& seq,
                                                      int target, BaselineKind baseline) const {
  if (!info_.serves_native(method)) return Backend::native_attribution(method, seq, target, baseline);
  const json result = call("native_attribution", {{"method", method},
                                                  {"sequence", encode(seq)},
                                                  {"target", target},
                                                  {"baseline", baseline_name(baseline)}});
  return finite_vector(result.value("scores", json()), "scores");
}

std::unique_ptr<RemoteBackend> connect_command(const std::string& command) {
  return std::make_unique<RemoteBackend>(std::make_unique<PipeTransport>(command));
}

std::unique_ptr<RemoteBackend> connect_url(const std::string& url) {
  return std::make_unique<RemoteBackend>(std::make_unique<HttpTransport>(url));
}

}  // namespace attribench::protocol
