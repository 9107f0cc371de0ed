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
#ifndef EXLEAK_SCORING_H_
#define EXLEAK_SCORING_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exleak/core.h"
#include "exleak/http.h"

namespace exleak {

// Sentiment, embedding and tokenizer provider. Implementations must be safe
// for concurrent use and preserve batch order.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual std::vector<SentimentScore> sentiment(
      std::span<const std::string> texts) = 0;
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
  virtual std::vector<long long> tokenize(std::span<const std::string> texts,
                                          std::string_view tokenizer) = 0;
  virtual EndpointDescriptor descriptor() const = 0;
};

// Client-side operations. These add the contract on top of any Scorer:
// non-empty batches, order and length checks, the uniform score for empty
// text, and local whitespace tokenization.
std::vector<SentimentScore> sentiment(std::span<const std::string> texts,
                                      Scorer& scorer);
std::vector<Embedding> embed(std::span<const std::string> texts,
                             Scorer& scorer);
// tokenizer_id is "whitespace" (local, scorer may be null) or "gpt2".
std::vector<long long> token_count(std::span<const std::string> texts,
                                   Scorer* scorer,
                                   std::string_view tokenizer_id);

long long whitespace_token_count(std::string_view text);

// Lowercased runs of [a-z0-9'].
std::vector<std::string> lexical_tokens(std::string_view text);

struct LexiconEntry {
  std::string_view word;
  double weight;
};

std::span<const LexiconEntry> stub_positive_lexicon();
std::span<const LexiconEntry> stub_negative_lexicon();

struct StubScorerOptions {
  // Symmetric multiplicative noise on the class masses, keyed by the token
  // multiset. 0 disables it.
  double noise = 0.0;
  std::uint64_t noise_seed = 0;
  std::size_t dim = 16;
  // Frozen gpt2 counts; texts outside the table fall back to counting
  // GPT-2 pre-tokenizer pieces, a lower bound on the BPE count.
  std::map<std::string, long long, std::less<>> gpt2_table;
};

// Deterministic in-process scorer.
//
// Sentiment: every class starts with mass 1.0 and each lexicon hit adds its
// weight to its class, so text without hits scores uniform (argmax neutral by
// tie-break). Embedding: lowercased tokens hashed into `dim` buckets, counts
// L2-normalized; tokenless text hashes a sentinel token.
class StubScorer : public Scorer {
 public:
  explicit StubScorer(StubScorerOptions options = {});

  std::vector<SentimentScore> sentiment(
      std::span<const std::string> texts) override;
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::vector<long long> tokenize(std::span<const std::string> texts,
                                  std::string_view tokenizer) override;
  EndpointDescriptor descriptor() const override;

  SentimentScore score_one(std::string_view text) const;
  Embedding embed_one(std::string_view text) const;

 private:
  StubScorerOptions options_;
};

// Loads {"counts": {text: n}} as written by tests/fixtures.
std::map<std::string, long long, std::less<>> load_gpt2_table(
    const std::string& path);

long long gpt2_pretoken_count(std::string_view text);

// Scorer wire protocol client. Batches larger than max_batch are split.
class HttpScorer : public Scorer {
 public:
  explicit HttpScorer(std::string url, RetryPolicy retry = {},
                      std::size_t max_batch = 64);

  std::vector<SentimentScore> sentiment(
      std::span<const std::string> texts) override;
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::vector<long long> tokenize(std::span<const std::string> texts,
                                  std::string_view tokenizer) override;
  EndpointDescriptor descriptor() const override;

 private:
  HttpEndpoint endpoint_;
  RetryPolicy retry_;
  std::size_t max_batch_;
  std::mutex dim_mu_;
  std::optional<std::size_t> dim_;
};

}  // namespace exleak

#endif  // EXLEAK_SCORING_H_
