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
#include "exleak/conformance.h"

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include "exleak/errors.h"
#include "exleak/genpipe.h"
#include "exleak/http.h"
#include "exleak/scoring.h"
#include "exleak/serialize.h"
#include "httplib.h"

namespace exleak {
namespace {

struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool cond, const std::string& what) {
  if (!cond) throw CheckFailed(what);
}

class Runner {
 public:
  explicit Runner(ConformanceReport& report) : report_(report) {}

  void check(const std::string& name, const std::function<void()>& body) {
    ConformanceCheck c{name, false, ""};
    try {
      body();
      c.passed = true;
    } catch (const std::exception& e) {
      c.detail = e.what();
    }
    report_.checks.push_back(std::move(c));
  }

 private:
  ConformanceReport& report_;
};

RetryPolicy single_attempt() {
  RetryPolicy p;
  p.max_attempts = 1;
  p.timeout = std::chrono::seconds(30);
  return p;
}

HttpResponse post(const HttpEndpoint& ep, const std::string& path,
                  const Json& body) {
  return post_json(ep, path, body, single_attempt());
}

HttpResponse post_text(const HttpEndpoint& ep, const std::string& path,
                       const std::string& payload) {
  httplib::Client client(ep.origin);
  auto res = client.Post(ep.base_path + path, payload, "application/json");
  if (!res) throw CheckFailed("POST " + path + ": " + httplib::to_string(res.error()));
  return HttpResponse{res->status, res->body};
}

Json ok_json(const HttpResponse& r) {
  expect(r.status == 200, "HTTP " + std::to_string(r.status) + ": " +
                              r.body.substr(0, 200));
  try {
    return Json::parse(r.body);
  } catch (const Json::parse_error&) {
    throw CheckFailed("response is not JSON");
  }
}

void expect_error(const HttpResponse& r, int status, const std::string& param) {
  expect(r.status == status, "expected HTTP " + std::to_string(status) +
                                 ", got " + std::to_string(r.status));
  if (param.empty()) return;
  Json body;
  try {
    body = Json::parse(r.body);
  } catch (const Json::parse_error&) {
    throw CheckFailed("error body is not JSON");
  }
  expect(body.contains("param") && body["param"] == param,
         "error body does not name param '" + param + "': " + r.body);
}

std::vector<std::vector<double>> probs_of(const Json& j, std::size_t n) {
  expect(j.contains("probs") && j["probs"].is_array(), "probs missing");
  expect(j["probs"].size() == n, "expected " + std::to_string(n) + " rows, got " +
                                     std::to_string(j["probs"].size()));
  std::vector<std::vector<double>> rows;
  for (const Json& row : j["probs"]) {
    expect(row.is_array() && row.size() == 3, "row is not a 3-vector");
    std::vector<double> r;
    for (const Json& v : row) {
      expect(v.is_number(), "probability is not a number");
      r.push_back(v.get<double>());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::vector<double>> vectors_of(const Json& j, std::size_t n,
                                            std::size_t* dim) {
  expect(j.contains("vectors") && j["vectors"].is_array(), "vectors missing");
  expect(j.contains("dim") && j["dim"].is_number_integer(), "dim missing");
  *dim = j["dim"].get<std::size_t>();
  expect(*dim > 0, "dim must be positive");
  expect(j["vectors"].size() == n, "expected " + std::to_string(n) +
                                       " vectors, got " +
                                       std::to_string(j["vectors"].size()));
  std::vector<std::vector<double>> out;
  for (const Json& v : j["vectors"]) {
    expect(v.is_array() && v.size() == *dim, "vector length differs from dim");
    std::vector<double> row;
    double norm = 0.0;
    for (const Json& x : v) {
      expect(x.is_number() && std::isfinite(x.get<double>()),
             "non-finite embedding component");
      row.push_back(x.get<double>());
      norm += row.back() * row.back();
    }
    expect(norm > 0.0, "zero embedding");
    out.push_back(std::move(row));
  }
  return out;
}

Json texts_json(const std::vector<std::string>& texts) {
  return Json{{"texts", texts}};
}

const std::vector<std::string>& sample_texts() {
  static const std::vector<std::string> t = {
      "I love this wonderful morning!",
      "The report is due on Tuesday.",
      "This is a terrible, awful mess.",
  };
  return t;
}

// gpt2 token counts of fixed sentences.
const std::map<std::string, long long>& gpt2_golden() {
  static const std::map<std::string, long long> g = {
      {"hello world", 2},
      {"Her passion is", 3},
      {"I lost my keys on the way here.", 9},
      {"She checked the time on her watch.", 8},
  };
  return g;
}

}  // namespace

bool ConformanceReport::passed() const {
  if (checks.empty()) return false;
  for (const ConformanceCheck& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

std::string ConformanceReport::to_text() const {
  std::string out;
  for (const ConformanceCheck& c : checks) {
    out += (c.passed ? "PASS " : "FAIL ") + c.name;
    if (!c.passed) out += ": " + c.detail;
    out += "\n";
  }
  return out;
}

ConformanceReport run_scorer_conformance(const std::string& url,
                                         const ScorerConformanceOptions& opts) {
  ConformanceReport report;
  report.target = url;
  Runner run(report);
  const HttpEndpoint ep = HttpEndpoint::parse(url);
  const auto& texts = sample_texts();

  run.check("sentiment.schema_and_simplex", [&] {
    for (const auto& row : probs_of(ok_json(post(ep, "/v1/sentiment", texts_json(texts))),
                                    texts.size())) {
      double sum = 0.0;
      for (double p : row) {
        expect(p >= 0.0 && p <= 1.0, "probability outside [0, 1]");
        sum += p;
      }
      expect(std::abs(sum - 1.0) <= 1e-6, "row does not sum to 1");
    }
  });
  run.check("sentiment.batch_order", [&] {
    const auto forward =
        probs_of(ok_json(post(ep, "/v1/sentiment", texts_json(texts))), texts.size());
    const std::vector<std::string> rev(texts.rbegin(), texts.rend());
    const auto backward =
        probs_of(ok_json(post(ep, "/v1/sentiment", texts_json(rev))), rev.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      expect(forward[i] == backward[texts.size() - 1 - i],
             "row " + std::to_string(i) + " moved with the batch order");
    }
  });
  run.check("sentiment.deterministic", [&] {
    const Json a = ok_json(post(ep, "/v1/sentiment", texts_json(texts)));
    const Json b = ok_json(post(ep, "/v1/sentiment", texts_json(texts)));
    expect(a == b, "repeated request returned different probabilities");
  });
  run.check("sentiment.label_order", [&] {
    const auto rows = probs_of(
        ok_json(post(ep, "/v1/sentiment", texts_json({texts[0], texts[2]}))), 2);
    expect(rows[0][2] > rows[0][0], "positive text is not more positive than negative");
    expect(rows[1][0] > rows[1][2], "negative text is not more negative than positive");
  });
  run.check("sentiment.empty_batch", [&] {
    probs_of(ok_json(post(ep, "/v1/sentiment", texts_json({}))), 0);
  });

  run.check("embed.schema", [&] {
    std::size_t dim = 0;
    vectors_of(ok_json(post(ep, "/v1/embed", texts_json(texts))), texts.size(), &dim);
  });
  run.check("embed.duplicates_identical", [&] {
    std::size_t dim = 0;
    const auto v = vectors_of(
        ok_json(post(ep, "/v1/embed", texts_json({texts[1], texts[0], texts[1]}))), 3,
        &dim);
    expect(v[0] == v[2], "duplicate texts embedded differently");
  });
  run.check("embed.dimension_constant", [&] {
    std::size_t d1 = 0;
    std::size_t d2 = 0;
    vectors_of(ok_json(post(ep, "/v1/embed", texts_json(texts))), texts.size(), &d1);
    vectors_of(ok_json(post(ep, "/v1/embed", texts_json({"short", "a rather longer "
                                                         "sentence about trains"}))),
               2, &d2);
    expect(d1 == d2, "dimension changed between batches");
  });
  run.check("embed.batch_order", [&] {
    std::size_t dim = 0;
    const auto one = vectors_of(
        ok_json(post(ep, "/v1/embed", texts_json({texts[2]}))), 1, &dim);
    const auto many = vectors_of(
        ok_json(post(ep, "/v1/embed", texts_json(texts))), texts.size(), &dim);
    expect(one[0] == many[2], "embedding depends on batch position");
  });

  run.check("tokenize.schema", [&] {
    const Json j = ok_json(post(ep, "/v1/tokenize",
                                Json{{"texts", texts}, {"tokenizer", "gpt2"}}));
    expect(j.contains("counts") && j["counts"].is_array() &&
               j["counts"].size() == texts.size(),
           "counts missing or wrong length");
    for (const Json& c : j["counts"]) {
      expect(c.is_number_integer() && c.get<long long>() >= 0,
             "count is not a non-negative integer");
    }
  });
  if (opts.check_gpt2) {
    run.check("tokenize.gpt2_golden", [&] {
      std::vector<std::string> keys;
      for (const auto& [text, n] : gpt2_golden()) keys.push_back(text);
      const Json j = ok_json(post(ep, "/v1/tokenize",
                                  Json{{"texts", keys}, {"tokenizer", "gpt2"}}));
      for (std::size_t i = 0; i < keys.size(); ++i) {
        const long long got = j["counts"][i].get<long long>();
        const long long want = gpt2_golden().at(keys[i]);
        expect(got == want, "'" + keys[i] + "': expected " + std::to_string(want) +
                                " tokens, got " + std::to_string(got));
      }
    });
  }
  run.check("tokenize.unknown_tokenizer", [&] {
    expect_error(post(ep, "/v1/tokenize",
                      Json{{"texts", texts}, {"tokenizer", "no-such-tokenizer"}}),
                 400, "tokenizer");
  });

  run.check("error.missing_texts", [&] {
    expect_error(post(ep, "/v1/sentiment", Json{{"text", "singular"}}), 400, "texts");
  });
  run.check("error.malformed_json", [&] {
    expect_error(post_text(ep, "/v1/embed", "{\"texts\": ["), 400, "body");
  });
  run.check("error.non_object_body", [&] {
    expect_error(post(ep, "/v1/embed", Json::array({"a"})), 400, "body");
  });
  run.check("error.oversized_batch", [&] {
    const std::vector<std::string> big(opts.max_batch + 1, "x");
    for (const char* path : {"/v1/sentiment", "/v1/embed"}) {
      expect_error(post(ep, path, texts_json(big)), 413, "");
    }
  });
  run.check("error.batch_at_limit", [&] {
    const std::vector<std::string> full(opts.max_batch, "steady text");
    probs_of(ok_json(post(ep, "/v1/sentiment", texts_json(full))), full.size());
  });

  run.check("client.http_scorer", [&] {
    HttpScorer client(url, single_attempt(), opts.max_batch);
    const auto direct =
        probs_of(ok_json(post(ep, "/v1/sentiment", texts_json(texts))), texts.size());
    const auto scores = sentiment(texts, client);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      for (ExpressionLabel l : kAllLabels) {
        expect(scores[i][l] == direct[i][index_of(l)],
               "client reordered or altered probabilities");
      }
    }
    const auto vectors = embed(texts, client);
    expect(vectors.size() == texts.size(), "client dropped embeddings");
  });
  return report;
}

ConformanceReport run_backend_conformance(const std::string& url,
                                          const std::string& model) {
  ConformanceReport report;
  report.target = url;
  Runner run(report);
  const HttpEndpoint ep = HttpEndpoint::parse(url);
  const Json base{{"prompt", "Complete the sentence: The music sounded"},
                  {"top_p", 0.9},
                  {"top_k", 50},
                  {"repetition_penalty", 1.1},
                  {"max_tokens", 32},
                  {"seed", 1234}};
  auto with = [&](const char* key, const Json& value) {
    Json j = base;
    j[key] = value;
    return j;
  };
  auto text_of = [](const Json& j) {
    expect(j.contains("text") && j["text"].is_string(), "text missing");
    return j["text"].get<std::string>();
  };

  run.check("complete.schema", [&] { text_of(ok_json(post(ep, "/v1/complete", base))); });
  run.check("complete.seed_deterministic", [&] {
    expect(text_of(ok_json(post(ep, "/v1/complete", base))) ==
               text_of(ok_json(post(ep, "/v1/complete", base))),
           "same seed gave different text");
  });
  run.check("complete.max_tokens", [&] {
    const std::string t = text_of(ok_json(post(ep, "/v1/complete", with("max_tokens", 3))));
    expect(whitespace_token_count(t) <= 3, "more than 3 words for max_tokens=3");
  });
  run.check("complete.missing_prompt", [&] {
    Json j = base;
    j.erase("prompt");
    expect_error(post(ep, "/v1/complete", j), 400, "prompt");
  });
  run.check("complete.rejects_top_p", [&] {
    expect_error(post(ep, "/v1/complete", with("top_p", 1.5)), 400, "top_p");
  });
  run.check("complete.rejects_negative_seed", [&] {
    expect_error(post(ep, "/v1/complete", with("seed", -1)), 400, "seed");
  });
  run.check("complete.rejects_max_tokens", [&] {
    expect_error(post(ep, "/v1/complete", with("max_tokens", 0)), 400, "max_tokens");
  });

  run.check("completions.schema", [&] {
    const Json j = ok_json(post(ep, "/v1/completions", with("model", model)));
    expect(j.contains("choices") && j["choices"].is_array() && !j["choices"].empty(),
           "choices missing");
    expect(j["choices"][0].contains("text") && j["choices"][0]["text"].is_string(),
           "choices[0].text missing");
  });
  run.check("completions.missing_model", [&] {
    expect_error(post(ep, "/v1/completions", base), 400, "model");
  });

  run.check("client.http_backend", [&] {
    HttpBackend client(url, single_attempt());
    CompletionRequest req;
    req.prompt = base["prompt"].get<std::string>();
    req.max_tokens = 32;
    req.seed = 1234;
    expect(client.complete(req) == text_of(ok_json(post(ep, "/v1/complete", base))),
           "native client text differs from the raw response");
  });
  run.check("client.completions_backend", [&] {
    CompletionsBackend client(url, model, single_attempt());
    CompletionRequest req;
    req.prompt = base["prompt"].get<std::string>();
    req.max_tokens = 32;
    req.seed = 1234;
    const std::string got = client.complete(req);
    const Json raw = ok_json(post(ep, "/v1/completions", with("model", model)));
    expect(got == raw["choices"][0]["text"].get<std::string>(),
           "completions client text differs from the raw response");
  });
  run.check("client.parameter_rejection", [&] {
    HttpBackend client(url, single_attempt());
    CompletionRequest req;
    req.prompt = "x";
    req.top_p = 1.5;
    try {
      client.complete(req);
    } catch (const ConfigError& e) {
      expect(std::string(e.what()).find("top_p") != std::string::npos,
             std::string("config error does not name top_p: ") + e.what());
      return;
    }
    throw CheckFailed("invalid top_p was accepted");
  });
  return report;
}

}  // namespace exleak
