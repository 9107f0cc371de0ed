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
#ifndef EXLEAK_SERVER_H_
#define EXLEAK_SERVER_H_

#include <cstddef>
#include <memory>
#include <string>

#include "exleak/genpipe.h"
#include "exleak/scoring.h"

namespace exleak {

inline constexpr std::size_t kDefaultMaxBatch = 256;

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 binds an ephemeral port
  std::size_t max_batch = kDefaultMaxBatch;
  // Fault injection for client tests: the first fail_first requests are
  // answered with fail_status and an empty body.
  int fail_first = 0;
  int fail_status = 503;
};

// HTTP front for an in-process Scorer or Backend, serving the wire protocols
// on a background thread. Request errors are answered as
//   400 {"error": message, "param": field}
//   413 {"error": message, "max_batch": n}
class ProtocolServer {
 public:
  virtual ~ProtocolServer();
  ProtocolServer(const ProtocolServer&) = delete;
  ProtocolServer& operator=(const ProtocolServer&) = delete;

  // Binds and starts serving. Throws IoError if the address is taken.
  void start();
  void stop();
  // Blocks until stop() is called from another thread or a signal handler.
  void wait();

  int port() const;
  std::string url() const;
  long long requests() const;

 protected:
  explicit ProtocolServer(ServerOptions options);
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// POST /v1/sentiment, /v1/embed, /v1/tokenize.
class ScorerServer : public ProtocolServer {
 public:
  explicit ScorerServer(Scorer& scorer, ServerOptions options = {});
};

// POST /v1/complete (native) and /v1/completions (completions dialect).
class BackendServer : public ProtocolServer {
 public:
  explicit BackendServer(Backend& backend, ServerOptions options = {});
};

}  // namespace exleak

#endif  // EXLEAK_SERVER_H_
