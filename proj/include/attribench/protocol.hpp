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

#ifndef ATTRIBENCH_PROTOCOL_HPP_
#define ATTRIBENCH_PROTOCOL_HPP_

#include <chrono>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attribench/backend.hpp"
#include "attribench/errors.hpp"

// Newline-delimited JSON protocol between the engine and out-of-process
// model servers.
//
//   request:  {"id": int, "op": string, "params": object}
//   response: {"id": int, "result": object}
//          or {"id": int, "error": {"code": string, "message": string}}
//
// Ops: info, tokenize, predict, embed, predict_embeds, grad_embeds,
// native_attribution. Matrices travel as row-major nested arrays.
namespace attribench::protocol {

using nlohmann::json;

json encode(const TokenSequence& seq);
TokenSequence decode_sequence(const json& value);
json encode(const Matrix& matrix);
Matrix decode_matrix(const json& value);
json encode(const BackendInfo& info);
BackendInfo decode_info(const json& value);

json error_response(const json& id, ErrorCode code, const std::string& message);

// Executes one request against `backend`. Never throws: failures become
// error responses carrying the error's wire code.
json handle_request(const Backend& backend, const json& request);

// Reads requests line by line until end of input, answering each on `out`.
// Lines that are not valid JSON get a BAD_REQUEST response with a null id.
void serve(const Backend& backend, std::istream& in, std::ostream& out);

class Transport {
 public:
  virtual ~Transport() = default;
  // Sends one request line and returns the parsed response.
  virtual json round_trip(const json& request) = 0;
};

// Serves requests in-process through the full serialize/parse path.
class LoopbackTransport final : public Transport {
 public:
  explicit LoopbackTransport(const Backend& backend) : backend_(backend) {}
  json round_trip(const json& request) override;

 private:
  const Backend& backend_;
};

// Spawns `/bin/sh -c command` and talks over its stdin/stdout. After a
// timeout or I/O failure the stream is out of sync, so the transport refuses
// further requests and kills the child on destruction.
class PipeTransport final : public Transport {
 public:
  explicit PipeTransport(const std::string& command,
                         std::chrono::milliseconds timeout = std::chrono::seconds(120));
  ~PipeTransport() override;
  PipeTransport(const PipeTransport&) = delete;
  PipeTransport& operator=(const PipeTransport&) = delete;

  json round_trip(const json& request) override;

 private:
  std::string read_line();

  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string pending_;
  std::chrono::milliseconds timeout_;
  bool broken_ = false;
};

// One POST per request to a single endpoint URL.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(std::string url,
                         std::chrono::milliseconds timeout = std::chrono::seconds(120));
  json round_trip(const json& request) override;

 private:
  std::string url_;
  std::chrono::milliseconds timeout_;
};

// Backend whose every call is a protocol round trip. Requests on one
// connection are serialized; the server's info response fixes the
// capabilities up front.
class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(std::unique_ptr<Transport> transport);

  const BackendInfo& info() const override { return info_; }
  TokenSequence tokenize(std::string_view text) const override;
  std::vector<ProbabilityVector> predict(
      std::span<const TokenSequence> batch) const override;
  EmbeddingMatrix embed(const TokenSequence& seq) const override;
  std::vector<ModelOutput> predict_embeddings(
      std::span<const EmbeddingMatrix> batch) const override;
  Matrix gradient_wrt_embeddings(const EmbeddingMatrix& rows,
                                 int target) const override;
  std::vector<double> native_attribution(const std::string& method,
                                         const TokenSequence& seq, int target,
                                         BaselineKind baseline) const override;

  // Number of requests sent so far, including the initial info call.
  int requests() const;

 private:
  json call(const std::string& op, json params) const;

  std::unique_ptr<Transport> transport_;
  mutable std::mutex mutex_;
  mutable int next_id_ = 1;
  BackendInfo info_;
};

// Builds a remote backend from a command line (child process) or an
// http(s) URL.
std::unique_ptr<RemoteBackend> connect_command(const std::string& command);
std::unique_ptr<RemoteBackend> connect_url(const std::string& url);

}  // namespace attribench::protocol

#endif  // ATTRIBENCH_PROTOCOL_HPP_
