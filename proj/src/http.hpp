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

#ifndef ATTRIBENCH_SRC_HTTP_HPP_
#define ATTRIBENCH_SRC_HTTP_HPP_

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace attribench::internal {

struct HttpOutcome {
  bool ok = false;        // a response arrived (any status)
  bool timed_out = false;
  int status = 0;
  std::string body;
  std::string error;      // transport failure description
};

// POSTs `body` as application/json to an http:// or https:// URL.
HttpOutcome http_post(const std::string& url, const std::string& body,
                      const std::vector<std::pair<std::string, std::string>>& headers,
                      std::chrono::milliseconds timeout);

}  // namespace attribench::internal

#endif  // ATTRIBENCH_SRC_HTTP_HPP_
