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

#include "http.hpp"

#include "httplib.h"

#include "attribench/errors.hpp"

namespace attribench::internal {

HttpOutcome http_post(const std::string& url, const std::string& body,
                      const std::vector<std::pair<std::string, std::string>>& headers,
                      std::chrono::milliseconds timeout) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail(ErrorCode::kConfigError, "URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  if (!client.is_valid()) fail(ErrorCode::kConfigError, "unsupported URL: " + url);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);

  HttpOutcome out;
  auto res = client.Post(path, h, body, "application/json");
  if (!res) {
    out.timed_out = res.error() == httplib::Error::Read || res.error() == httplib::Error::ConnectionTimeout;
    out.error = httplib::to_string(res.error());
    return out;
  }
  out.ok = true;
  out.status = res->status;
  out.body = res->body;
  return out;
}

}  // namespace attribench::internal
