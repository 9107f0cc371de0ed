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
#include "exleak/scoring.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "exleak/errors.h"
#include "exleak/random.h"
#include "exleak/serialize.h"

namespace exleak {
namespace {

constexpr std::array<LexiconEntry, 40> kPositive = {{
    {"love", 1.5},       {"wonderful", 1.5}, {"amazing", 1.5},
    {"fantastic", 1.5},  {"excellent", 1.5}, {"great", 1.0},
    {"happy", 1.0},      {"joy", 1.0},       {"joyful", 1.0},
    {"delight", 1.0},    {"delighted", 1.0}, {"delightful", 1.0},
    {"beautiful", 1.0},  {"brilliant", 1.0}, {"lovely", 1.0},
    {"heartfelt", 1.0},  {"grateful", 1.0},  {"thrilled", 1.0},
    {"excited", 1.0},    {"cheerful", 1.0},  {"pleasant", 1.0},
    {"perfect", 1.0},    {"awesome", 1.0},   {"glad", 1.0},
    {"gift", 1.0},       {"success", 1.0},   {"proud", 1.0},
    {"smile", 1.0},      {"smiled", 1.0},    {"laugh", 1.0},
    {"laughed", 1.0},    {"blessed", 1.0},   {"hope", 1.0},
    {"enjoy", 1.0},      {"enjoyed", 1.0},   {"celebrate", 1.0},
    {"compliment", 1.0}, {"superb", 1.0},    {"marvelous", 1.0},
    {"won", 1.0},
}};

constexpr std::array<LexiconEntry, 40> kNegative = {{
    {"terrible", 1.5},   {"awful", 1.5},      {"horrible", 1.5},
    {"hate", 1.5},       {"worst", 1.5},      {"sad", 1.0},
    {"angry", 1.0},      {"miserable", 1.0},  {"disaster", 1.0},
    {"disgusting", 1.0}, {"painful", 1.0},    {"pain", 1.0},
    {"lost", 1.0},       {"missed", 1.0},     {"broken", 1.0},
    {"fail", 1.0},       {"failed", 1.0},     {"failure", 1.0},
    {"bad", 1.0},        {"ugly", 1.0},       {"annoying", 1.0},
    {"annoyed", 1.0},    {"frustrated", 1.0}, {"furious", 1.0},
    {"upset", 1.0},      {"cry", 1.0},        {"cried", 1.0},
    {"lonely", 1.0},     {"afraid", 1.0},     {"scared", 1.0},
    {"fear", 1.0},       {"hurt", 1.0},       {"sick", 1.0},
    {"tragic", 1.0},     {"grief", 1.0},      {"regret", 1.0},
    {"boring", 1.0},     {"stupid", 1.0},     {"nasty", 1.0},
    {"dreadful", 1.0},
}};

constexpr std::string_view kEmptySentinel = "\x01<empty>";

double lexicon_mass(std::span<const LexiconEntry> lexicon,
                    std::string_view token) {
  for (const LexiconEntry& e : lexicon) {
    if (e.word == token) return e.weight;
  }
  return 0.0;
}

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) || c == '\'';
}

void check_batch(std::span<const std::string> texts, const char* op) {
  if (texts.empty()) {
    throw ArgumentError(std::string(op) + ": empty batch");
  }
}

}  // namespace

std::vector<std::string> lexical_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

long long whitespace_token_count(std::string_view text) {
  long long n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

long long gpt2_pretoken_count(std::string_view text) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  auto is_letter = [](unsigned char c) {
    return std::isalpha(c) || c >= 0x80;
  };
  auto is_digit = [](unsigned char c) { return std::isdigit(c) != 0; };
  static constexpr std::array<std::string_view, 7> kContractions = {
      "'s", "'t", "'re", "'ve", "'m", "'ll", "'d"};

  long long count = 0;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (text[i] == '\'') {
      bool matched = false;
      for (std::string_view c : kContractions) {
        if (text.substr(i, c.size()) == c) {
          i += c.size();
          ++count;
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    std::size_t j = i;
    if (text[j] == ' ' && j + 1 < n && !is_space(text[j + 1])) ++j;
    const unsigned char c = text[j];
    if (is_letter(c)) {
      while (j < n && is_letter(text[j])) ++j;
    } else if (is_digit(c)) {
      while (j < n && is_digit(text[j])) ++j;
    } else if (!is_space(c)) {
      while (j < n && !is_space(text[j]) && !is_letter(text[j]) &&
             !is_digit(text[j])) {
        ++j;
      }
    } else {
      while (j < n && is_space(text[j])) ++j;
      // Trailing whitespace before a word stays with that word.
      if (j < n && j - i > 1 && text[j - 1] == ' ') --j;
    }
    ++count;
    i = j;
  }
  return count;
}

std::span<const LexiconEntry> stub_positive_lexicon() { return kPositive; }
std::span<const LexiconEntry> stub_negative_lexicon() { return kNegative; }

StubScorer::StubScorer(StubScorerOptions options)
    : options_(std::move(options)) {
  if (options_.dim == 0) throw ConfigError("stub embedder dim must be > 0");
  if (options_.noise < 0.0) throw ConfigError("stub noise must be >= 0");
}

SentimentScore StubScorer::score_one(std::string_view text) const {
  std::vector<std::string> tokens = lexical_tokens(text);
  std::array<double, 3> mass = {1.0, 1.0, 1.0};
  for (const std::string& t : tokens) {
    mass[index_of(ExpressionLabel::kNegative)] += lexicon_mass(kNegative, t);
    mass[index_of(ExpressionLabel::kPositive)] += lexicon_mass(kPositive, t);
  }
  if (options_.noise > 0.0) {
    std::sort(tokens.begin(), tokens.end());
    std::uint64_t key = options_.noise_seed;
    for (const std::string& t : tokens) key = fnv1a64(t, mix64(key));
    for (std::size_t c = 0; c < 3; ++c) {
      const std::uint64_t h = derive_seed(key, c);
      const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
      mass[c] *= std::exp(options_.noise * (2.0 * u - 1.0));
    }
  }
  const double total = mass[0] + mass[1] + mass[2];
  return SentimentScore({mass[0] / total, mass[1] / total, mass[2] / total});
}

Embedding StubScorer::embed_one(std::string_view text) const {
  std::vector<double> v(options_.dim, 0.0);
  std::vector<std::string> tokens = lexical_tokens(text);
  if (tokens.empty()) tokens.emplace_back(kEmptySentinel);
  for (const std::string& t : tokens) {
    v[fnv1a64(t) % options_.dim] += 1.0;
  }
  double ss = 0.0;
  for (double x : v) ss += x * x;
  const double norm = std::sqrt(ss);
  for (double& x : v) x /= norm;
  return Embedding(std::move(v));
}

std::vector<SentimentScore> StubScorer::sentiment(
    std::span<const std::string> texts) {
  std::vector<SentimentScore> out;
  out.reserve(texts.size());
  for (const std::string& t : texts) out.push_back(score_one(t));
  return out;
}

std::vector<Embedding> StubScorer::embed(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const std::string& t : texts) out.push_back(embed_one(t));
  return out;
}

std::vector<long long> StubScorer::tokenize(std::span<const std::string> texts,
                                            std::string_view tokenizer) {
  std::vector<long long> out;
  out.reserve(texts.size());
  if (tokenizer == "whitespace") {
    for (const std::string& t : texts) out.push_back(whitespace_token_count(t));
    return out;
  }
  if (tokenizer != "gpt2") {
    throw ConfigError("unsupported tokenizer '" + std::string(tokenizer) + "'");
  }
  for (const std::string& t : texts) {
    auto it = options_.gpt2_table.find(t);
    out.push_back(it != options_.gpt2_table.end() ? it->second
                                                  : gpt2_pretoken_count(t));
  }
  return out;
}

EndpointDescriptor StubScorer::descriptor() const {
  std::string model = "lexicon-v1;dim=" + std::to_string(options_.dim);
  if (options_.noise > 0.0) {
    model += ";noise=" + format_double(options_.noise) +
             ";noise_seed=" + std::to_string(options_.noise_seed);
  }
  return EndpointDescriptor{"stub", "", model};
}

std::map<std::string, long long, std::less<>> load_gpt2_table(
    const std::string& path) {
  const Json j = read_json_file(path);
  std::map<std::string, long long, std::less<>> table;
  if (!j.contains("counts") || !j["counts"].is_object()) {
    throw SchemaError(path + ": counts: expected an object");
  }
  for (const auto& [text, n] : j["counts"].items()) {
    if (!n.is_number_integer()) {
      throw SchemaError(path + ": counts." + text + ": expected an integer");
    }
    table.emplace(text, n.get<long long>());
  }
  return table;
}

std::vector<SentimentScore> sentiment(std::span<const std::string> texts,
                                      Scorer& scorer) {
  check_batch(texts, "sentiment");
  std::vector<std::string> nonempty;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (!texts[i].empty()) {
      nonempty.push_back(texts[i]);
      where.push_back(i);
    }
  }
  std::vector<SentimentScore> out(texts.size(), SentimentScore::uniform());
  if (nonempty.empty()) return out;
  std::vector<SentimentScore> scored = scorer.sentiment(nonempty);
  if (scored.size() != nonempty.size()) {
    throw ProtocolError("sentiment: expected " +
                        std::to_string(nonempty.size()) + " scores, got " +
                        std::to_string(scored.size()));
  }
  for (std::size_t k = 0; k < where.size(); ++k) out[where[k]] = scored[k];
  return out;
}

std::vector<Embedding> embed(std::span<const std::string> texts,
                             Scorer& scorer) {
  check_batch(texts, "embed");
  std::vector<Embedding> out = scorer.embed(texts);
  if (out.size() != texts.size()) {
    throw ProtocolError("embed: expected " + std::to_string(texts.size()) +
                        " vectors, got " + std::to_string(out.size()));
  }
  for (const Embedding& e : out) {
    if (e.dim() != out.front().dim()) {
      throw ProtocolError("embed: mixed embedding dimensions in one batch");
    }
  }
  return out;
}

std::vector<long long> token_count(std::span<const std::string> texts,
                                   Scorer* scorer,
                                   std::string_view tokenizer_id) {
  if (tokenizer_id == "whitespace") {
    std::vector<long long> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) out.push_back(whitespace_token_count(t));
    return out;
  }
  if (tokenizer_id != "gpt2") {
    throw ConfigError("unknown tokenizer_id '" + std::string(tokenizer_id) +
                      "' (expected gpt2 or whitespace)");
  }
  if (scorer == nullptr) {
    throw ConfigError("tokenizer gpt2 needs a scorer endpoint");
  }
  if (texts.empty()) return {};
  std::vector<long long> out = scorer->tokenize(texts, tokenizer_id);
  if (out.size() != texts.size()) {
    throw ProtocolError("tokenize: expected " + std::to_string(texts.size()) +
                        " counts, got " + std::to_string(out.size()));
  }
  for (long long n : out) {
    if (n < 0) throw ProtocolError("tokenize: negative token count");
  }
  return out;
}

HttpScorer::HttpScorer(std::string url, RetryPolicy retry,
                       std::size_t max_batch)
    : endpoint_(HttpEndpoint::parse(url)),
      retry_(retry),
      max_batch_(std::max<std::size_t>(1, max_batch)) {}

namespace {

template <typename T, typename Fn>
std::vector<T> in_chunks(std::span<const std::string> texts, std::size_t chunk,
                         Fn&& fn) {
  std::vector<T> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); i += chunk) {
    auto part = texts.subspan(i, std::min(chunk, texts.size() - i));
    std::vector<T> got = fn(part);
    if (got.size() != part.size()) {
      throw ProtocolError("response has " + std::to_string(got.size()) +
                          " entries for a batch of " +
                          std::to_string(part.size()));
    }
    for (T& v : got) out.push_back(std::move(v));
  }
  return out;
}

Json texts_json(std::span<const std::string> texts) {
  Json arr = Json::array();
  for (const std::string& t : texts) arr.push_back(t);
  return arr;
}

[[noreturn]] void throw_status(const HttpResponse& r, const std::string& what) {
  if (r.status == 413) {
    throw ProtocolError(what + ": batch rejected as too large: " + r.body);
  }
  if (r.status == 400) {
    throw ConfigError(what + ": request rejected: " + r.body);
  }
  throw ProtocolError(what + ": unexpected HTTP " + std::to_string(r.status));
}

}  // namespace

std::vector<SentimentScore> HttpScorer::sentiment(
    std::span<const std::string> texts) {
  return in_chunks<SentimentScore>(texts, max_batch_, [&](auto part) {
    HttpResponse r = post_json(endpoint_, "/v1/sentiment",
                               Json{{"texts", texts_json(part)}}, retry_);
    if (r.status != 200) throw_status(r, "sentiment");
    const Json j = parse_response(r, "sentiment");
    if (!j.contains("probs") || !j["probs"].is_array()) {
      throw ProtocolError("sentiment: response lacks a probs array");
    }
    std::vector<SentimentScore> out;
    for (const Json& row : j["probs"]) {
      if (!row.is_array() || row.size() != 3) {
        throw ProtocolError("sentiment: each probs row must have 3 entries");
      }
      std::array<double, 3> p{};
      for (std::size_t c = 0; c < 3; ++c) {
        if (!row[c].is_number()) {
          throw ProtocolError("sentiment: non-numeric probability");
        }
        p[c] = row[c].get<double>();
      }
      try {
        out.emplace_back(p);
      } catch (const ArgumentError& e) {
        throw ProtocolError(std::string("sentiment: ") + e.what());
      }
    }
    return out;
  });
}

std::vector<Embedding> HttpScorer::embed(std::span<const std::string> texts) {
  return in_chunks<Embedding>(texts, max_batch_, [&](auto part) {
    HttpResponse r = post_json(endpoint_, "/v1/embed",
                               Json{{"texts", texts_json(part)}}, retry_);
    if (r.status != 200) throw_status(r, "embed");
    const Json j = parse_response(r, "embed");
    if (!j.contains("vectors") || !j["vectors"].is_array() ||
        !j.contains("dim") || !j["dim"].is_number_unsigned()) {
      throw ProtocolError("embed: response lacks vectors/dim");
    }
    const std::size_t dim = j["dim"].get<std::size_t>();
    {
      std::lock_guard<std::mutex> lock(dim_mu_);
      if (dim_ && *dim_ != dim) {
        throw ProtocolError("embed: dimension drift within run (" +
                            std::to_string(*dim_) + " then " +
                            std::to_string(dim) + ")");
      }
      dim_ = dim;
    }
    std::vector<Embedding> out;
    for (const Json& row : j["vectors"]) {
      if (!row.is_array() || row.size() != dim) {
        throw ProtocolError("embed: vector length differs from dim");
      }
      try {
        out.emplace_back(row.get<std::vector<double>>());
      } catch (const ArgumentError& e) {
        throw ProtocolError(std::string("embed: ") + e.what());
      } catch (const Json::exception&) {
        throw ProtocolError("embed: non-numeric vector entry");
      }
    }
    return out;
  });
}

std::vector<long long> HttpScorer::tokenize(std::span<const std::string> texts,
                                            std::string_view tokenizer) {
  return in_chunks<long long>(texts, max_batch_, [&](auto part) {
    HttpResponse r = post_json(
        endpoint_, "/v1/tokenize",
        Json{{"texts", texts_json(part)}, {"tokenizer", tokenizer}}, retry_);
    if (r.status != 200) throw_status(r, "tokenize");
    const Json j = parse_response(r, "tokenize");
    if (!j.contains("counts") || !j["counts"].is_array()) {
      throw ProtocolError("tokenize: response lacks a counts array");
    }
    std::vector<long long> out;
    for (const Json& n : j["counts"]) {
      if (!n.is_number_integer() || n.get<long long>() < 0) {
        throw ProtocolError("tokenize: counts must be non-negative integers");
      }
      out.push_back(n.get<long long>());
    }
    return out;
  });
}

EndpointDescriptor HttpScorer::descriptor() const {
  return EndpointDescriptor{"http", endpoint_.url(), ""};
}

}  // namespace exleak
