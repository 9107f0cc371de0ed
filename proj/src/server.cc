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
#include "exleak/server.h"

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <thread>

#include "exleak/errors.h"
#include "exleak/serialize.h"
#include "httplib.h"

namespace exleak {

struct ProtocolServer::Impl {
  explicit Impl(ServerOptions o) : options(std::move(o)) {}

  ServerOptions options;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<long long> requests{0};
  std::atomic<int> failures_left{0};
  std::mutex mu;
  std::condition_variable stopped_cv;
  bool stopped = false;
};

namespace {

struct RequestError {
  int status;
  std::string message;
  std::string param;
};

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

Json parse_body(const httplib::Request& req) {
  try {
    Json j = Json::parse(req.body);
    if (!j.is_object()) throw RequestError{400, "body must be a JSON object", "body"};
    return j;
  } catch (const Json::parse_error&) {
    throw RequestError{400, "body is not valid JSON", "body"};
  }
}

std::vector<std::string> texts_field(const Json& body, std::size_t max_batch) {
  if (!body.contains("texts") || !body["texts"].is_array()) {
    throw RequestError{400, "texts must be an array of strings", "texts"};
  }
  std::vector<std::string> texts;
  for (const Json& t : body["texts"]) {
    if (!t.is_string()) {
      throw RequestError{400, "texts must be an array of strings", "texts"};
    }
    texts.push_back(t.get<std::string>());
  }
  if (texts.size() > max_batch) {
    throw RequestError{413,
                       "batch of " + std::to_string(texts.size()) +
                           " exceeds max_batch " + std::to_string(max_batch),
                       "texts"};
  }
  return texts;
}

template <typename T>
std::optional<T> optional_number(const Json& body, const char* key) {
  if (!body.contains(key) || body[key].is_null()) return std::nullopt;
  const Json& v = body[key];
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) {
      throw RequestError{400, std::string(key) + " must be an integer", key};
    }
  } else if (!v.is_number()) {
    throw RequestError{400, std::string(key) + " must be a number", key};
  }
  return v.get<T>();
}

CompletionRequest completion_request(const Json& body) {
  if (!body.contains("prompt") || !body["prompt"].is_string()) {
    throw RequestError{400, "prompt must be a string", "prompt"};
  }
  CompletionRequest r;
  r.prompt = body["prompt"].get<std::string>();
  if (auto v = optional_number<double>(body, "top_p")) r.top_p = *v;
  if (auto v = optional_number<long long>(body, "top_k")) r.top_k = static_cast<int>(*v);
  if (auto v = optional_number<double>(body, "repetition_penalty")) {
    r.repetition_penalty = *v;
  }
  if (auto v = optional_number<long long>(body, "max_tokens")) {
    r.max_tokens = static_cast<int>(*v);
  }
  if (body.contains("seed") && !body["seed"].is_null()) {
    if (!body["seed"].is_number_unsigned()) {
      throw RequestError{400, "seed must be a non-negative integer", "seed"};
    }
    r.seed = body["seed"].get<std::uint64_t>();
  }
  if (!(r.top_p > 0.0 && r.top_p <= 1.0)) {
    throw RequestError{400, "top_p must be in (0, 1]", "top_p"};
  }
  if (r.top_k < 0) throw RequestError{400, "top_k must be >= 0", "top_k"};
  if (!(r.repetition_penalty >= 1.0)) {
    throw RequestError{400, "repetition_penalty must be >= 1", "repetition_penalty"};
  }
  if (r.max_tokens < 1) {
    throw RequestError{400, "max_tokens must be >= 1", "max_tokens"};
  }
  return r;
}

// Wraps a handler: maps request and library errors onto protocol replies.
template <typename Fn>
httplib::Server::Handler guarded(std::size_t max_batch, Fn fn) {
  return [max_batch, fn](const httplib::Request& req, httplib::Response& res) {
    try {
      reply(res, 200, fn(parse_body(req)));
    } catch (const RequestError& e) {
      Json body{{"error", e.message}, {"param", e.param}};
      if (e.status == 413) body["max_batch"] = max_batch;
      reply(res, e.status, body);
    } catch (const ConfigError& e) {
      reply(res, 400, Json{{"error", e.what()}});
    } catch (const ArgumentError& e) {
      reply(res, 400, Json{{"error", e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, Json{{"error", e.what()}});
    }
  };
}

}  // namespace

ProtocolServer::ProtocolServer(ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {
  impl_->failures_left = impl_->options.fail_first;
  Impl* impl = impl_.get();
  impl_->server.set_pre_routing_handler(
      [impl](const httplib::Request&, httplib::Response& res) {
        ++impl->requests;
        int left = impl->failures_left.load();
        while (left > 0 &&
               !impl->failures_left.compare_exchange_weak(left, left - 1)) {
        }
        if (left > 0) {
          res.status = impl->options.fail_status;
          return httplib::Server::HandlerResponse::Handled;
        }
        return httplib::Server::HandlerResponse::Unhandled;
      });
}

ProtocolServer::~ProtocolServer() { stop(); }

void ProtocolServer::start() {
  if (impl_->thread.joinable()) return;
  const auto& o = impl_->options;
  if (o.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(o.host);
  } else {
    impl_->port = impl_->server.bind_to_port(o.host, o.port) ? o.port : -1;
  }
  if (impl_->port < 0) {
    throw IoError("cannot bind " + o.host + ":" + std::to_string(o.port));
  }
  {
    std::lock_guard lock(impl_->mu);
    impl_->stopped = false;
  }
  impl_->thread = std::thread([impl = impl_.get()] {
    impl->server.listen_after_bind();
    std::lock_guard lock(impl->mu);
    impl->stopped = true;
    impl->stopped_cv.notify_all();
  });
  impl_->server.wait_until_ready();
}

void ProtocolServer::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  impl_->server.stop();
  impl_->thread.join();
}

void ProtocolServer::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

int ProtocolServer::port() const { return impl_->port; }

std::string ProtocolServer::url() const {
  return "http://" + impl_->options.host + ":" + std::to_string(impl_->port);
}

long long ProtocolServer::requests() const { return impl_->requests.load(); }

ScorerServer::ScorerServer(Scorer& scorer, ServerOptions options)
    : ProtocolServer(std::move(options)) {
  const std::size_t max_batch = impl_->options.max_batch;
  Scorer* s = &scorer;
  impl_->server.Post("/v1/sentiment", guarded(max_batch, [s, max_batch](const Json& b) {
    const auto texts = texts_field(b, max_batch);
    Json probs = Json::array();
    if (!texts.empty()) {
      for (const SentimentScore& sc : s->sentiment(texts)) {
        probs.push_back(sc.probs());
      }
    }
    return Json{{"probs", probs}};
  }));
  impl_->server.Post("/v1/embed", guarded(max_batch, [s, max_batch](const Json& b) {
    const auto texts = texts_field(b, max_batch);
    Json vectors = Json::array();
    std::size_t dim = 0;
    if (!texts.empty()) {
      for (const Embedding& e : s->embed(texts)) {
        dim = e.dim();
        vectors.push_back(std::vector<double>(e.values().begin(), e.values().end()));
      }
    }
    return Json{{"vectors", vectors}, {"dim", dim}};
  }));
  impl_->server.Post("/v1/tokenize", guarded(max_batch, [s, max_batch](const Json& b) {
    const auto texts = texts_field(b, max_batch);
    if (!b.contains("tokenizer") || !b["tokenizer"].is_string()) {
      throw RequestError{400, "tokenizer must be a string", "tokenizer"};
    }
    const std::string tokenizer = b["tokenizer"].get<std::string>();
    try {
      return Json{{"counts", texts.empty() ? std::vector<long long>{}
                                           : s->tokenize(texts, tokenizer)}};
    } catch (const ConfigError& e) {
      throw RequestError{400, e.what(), "tokenizer"};
    }
  }));
}

BackendServer::BackendServer(Backend& backend, ServerOptions options)
    : ProtocolServer(std::move(options)) {
  const std::size_t max_batch = impl_->options.max_batch;
  Backend* be = &backend;
  impl_->server.Post("/v1/complete", guarded(max_batch, [be](const Json& b) {
    return Json{{"text", be->complete(completion_request(b))}};
  }));
  impl_->server.Post("/v1/completions", guarded(max_batch, [be](const Json& b) {
    if (!b.contains("model") || !b["model"].is_string()) {
      throw RequestError{400, "model must be a string", "model"};
    }
    const std::string text = be->complete(completion_request(b));
    return Json{{"object", "text_completion"},
                {"model", b["model"]},
                {"choices",
                 Json::array({Json{{"index", 0},
                                   {"text", text},
                                   {"finish_reason", "length"}}})}};
  }));
}

}  // namespace exleak
