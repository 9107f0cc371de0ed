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
#include "exleak/http.h"

#include <algorithm>
#include <thread>

#include "exleak/errors.h"
#include "httplib.h"

namespace exleak {

HttpEndpoint HttpEndpoint::parse(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw ConfigError("endpoint '" + std::string(url) +
                      "' is not an http:// URL");
  }
  const std::string_view scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("unsupported scheme in '" + std::string(url) + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  HttpEndpoint e;
  if (path_start == std::string_view::npos) {
    e.origin = std::string(url);
  } else {
    e.origin = std::string(url.substr(0, path_start));
    e.base_path = std::string(url.substr(path_start));
    while (!e.base_path.empty() && e.base_path.back() == '/') {
      e.base_path.pop_back();
    }
  }
  if (e.origin.size() <= scheme_end + 3) {
    throw ConfigError("endpoint '" + std::string(url) + "' has no host");
  }
  return e;
}

HttpResponse post_json(const HttpEndpoint& endpoint, std::string_view path,
                       const Json& body, const RetryPolicy& retry) {
  const std::string full_path = endpoint.base_path + std::string(path);
  const std::string payload = body.dump();
  auto backoff = retry.initial_backoff;
  std::string last_error;
  const int attempts = std::max(1, retry.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client client(endpoint.origin);
    client.set_connection_timeout(retry.timeout);
    client.set_read_timeout(retry.timeout);
    client.set_write_timeout(retry.timeout);
    auto res = client.Post(full_path, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
    } else if (res->status >= 500 || res->status == 429) {
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      return HttpResponse{res->status, res->body};
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<long long>(
          static_cast<double>(backoff.count()) * retry.backoff_multiplier));
    }
  }
  throw TransportError("POST " + endpoint.origin + full_path + " failed after " +
                       std::to_string(attempts) + " attempt(s): " + last_error);
}

Json parse_response(const HttpResponse& response, std::string_view what) {
  if (response.status != 200) {
    throw ProtocolError(std::string(what) + ": unexpected HTTP " +
                        std::to_string(response.status) + ": " +
                        response.body.substr(0, 200));
  }
  try {
    return Json::parse(response.body);
  } catch (const Json::parse_error&) {
    throw ProtocolError(std::string(what) + ": response is not JSON");
  }
}

}  // namespace exleak
