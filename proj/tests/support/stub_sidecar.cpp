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

// Protocol server backed by a seeded reference model. Stands in for the
// out-of-process transformer server in integration tests.

#include <chrono>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "attribench/errors.hpp"
#include "attribench/protocol.hpp"
#include "httplib.h"
#include "test_models.hpp"

namespace {

using attribench::Capability;
using attribench::protocol::json;

// Mutates responses to exercise client-side error handling.
struct Faults {
  int delay_ms = 0;
  bool wrong_id = false;
  bool non_finite = false;
  int exit_after = -1;
};

json apply_faults(json response, const Faults& faults) {
  if (faults.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(faults.delay_ms));
  if (faults.wrong_id && response.contains("id") && response["id"].is_number_integer()) {
    response["id"] = response["id"].get<int>() + 1000;
  }
  if (faults.non_finite && response.contains("result") && response["result"].contains("probs")) {
    // JSON has no literal for infinity, so send a string where a number belongs.
    response["result"]["probs"][0][0] = "inf";
  }
  return response;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference-model protocol server for tests"};
  std::uint64_t seed = 7;
  int classes = 3;
  bool mask = false;
  bool no_gradients = false;
  bool no_embeddings = false;
  std::vector<std::string> native;
  int http_port = -1;
  Faults faults;
  app.add_option("--seed", seed, "Model seed");
  app.add_option("--classes", classes, "Number of classes");
  app.add_flag("--mask", mask, "Reserve a mask token");
  app.add_flag("--no-gradients", no_gradients, "Withhold the gradients capability");
  app.add_flag("--no-embeddings", no_embeddings, "Withhold the embeddings capability");
  app.add_option("--native", native, "Native methods to serve (deeplift, guided_backprop)");
  app.add_option("--http", http_port, "Serve HTTP POST on this port instead of stdio");
  app.add_option("--delay-ms", faults.delay_ms, "Sleep before each response");
  app.add_flag("--wrong-id", faults.wrong_id, "Answer with mismatched ids");
  app.add_flag("--non-finite", faults.non_finite, "Corrupt probability payloads");
  app.add_option("--exit-after", faults.exit_after, "Exit after this many responses");
  CLI11_PARSE(app, argc, argv);

  const auto model = attribench::testing::random_reference(seed, classes, mask);
  std::vector<Capability> caps;
  if (!no_gradients) caps.push_back(Capability::kGradients);
  if (!no_embeddings) caps.push_back(Capability::kEmbeddings);
  const attribench::testing::ProxyBackend backend(model, caps, native);

  if (http_port >= 0) {
    httplib::Server server;
    server.Post("/", [&](const httplib::Request& req, httplib::Response& res) {
      json response;
      try {
        response = attribench::protocol::handle_request(backend, json::parse(req.body));
      } catch (const json::parse_error& e) {
        response = attribench::protocol::error_response(nullptr, attribench::ErrorCode::kInvalidArgument,
                                                        e.what());
      }
      res.set_content(apply_faults(response, faults).dump(), "application/json");
    });
    int port = http_port;
    if (port == 0) {
      port = server.bind_to_any_port("127.0.0.1");
    } else if (!server.bind_to_port("127.0.0.1", port)) {
      std::cerr << "cannot bind port " << port << "\n";
      return 1;
    }
    std::cout << port << std::endl;  // lets the parent learn an ephemeral port
    server.listen_after_bind();
    return 0;
  }

  std::string line;
  int answered = 0;
  while (std::getline(std::cin, line)) {
    if (faults.exit_after >= 0 && answered >= faults.exit_after) return 0;
    json response;
    try {
      response = attribench::protocol::handle_request(backend, json::parse(line));
    } catch (const json::parse_error& e) {
      response = attribench::protocol::error_response(nullptr, attribench::ErrorCode::kInvalidArgument,
                                                      e.what());
    }
    std::cout << apply_faults(response, faults).dump() << std::endl;
    ++answered;
  }
  return 0;
}
