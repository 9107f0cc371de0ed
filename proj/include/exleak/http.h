//
// Copyright 2026 The exleak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#ifndef EXLEAK_HTTP_H_
#define EXLEAK_HTTP_H_

#include <chrono>
#include <string>
#include <string_view>

#include "exleak/serialize.h"

namespace exleak {

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double backoff_multiplier = 2.0;
  std::chrono::seconds timeout{120};
};

// "http://host:port/optional/prefix" split into what httplib wants.
struct HttpEndpoint {
  std::string origin;  // scheme://host:port
  std::string base_path;

  // Throws ConfigError on anything but an http(s) URL.
  static HttpEndpoint parse(std::string_view url);
  std::string url() const { return origin + base_path; }
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// POSTs a JSON body. Connection failures, 5xx and 429 are retried with
// exponential backoff; once the policy is exhausted TransportError is
// thrown. Any other status is returned to the caller.
HttpResponse post_json(const HttpEndpoint& endpoint, std::string_view path,
                       const Json& body, const RetryPolicy& retry);

// Parses a 200 response body, throwing ProtocolError on invalid JSON.
Json parse_response(const HttpResponse& response, std::string_view what);

}  // namespace exleak

#endif  // EXLEAK_HTTP_H_
