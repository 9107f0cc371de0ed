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
#include "test_support.h"

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <set>

#include "exleak/datagen.h"
#include "exleak/random.h"

namespace exleak::testing {

std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(EXLEAK_FIXTURE_DIR) / name;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = std::filesystem::temp_directory_path() /
          ("exleak-test-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++) + "-" + std::to_string(stamp));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

OracleWilcoxon wilcoxon_bruteforce(const std::vector<double>& d) {
  std::vector<double> mag;
  std::vector<bool> pos;
  for (double x : d) {
    if (x == 0.0) continue;
    mag.push_back(std::fabs(x));
    pos.push_back(x > 0.0);
  }
  OracleWilcoxon out;
  out.n = static_cast<int>(mag.size());
  std::vector<double> rank(mag.size());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    double less = 0.0;
    double equal = 0.0;
    for (double m : mag) {
      if (m < mag[i]) less += 1.0;
      if (m == mag[i]) equal += 1.0;
    }
    rank[i] = less + (equal + 1.0) / 2.0;
    if (pos[i]) out.w_plus += rank[i];
  }
  const std::uint64_t patterns = std::uint64_t{1} << mag.size();
  std::uint64_t hits = 0;
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < mag.size(); ++i) {
      if (mask >> i & 1U) w += rank[i];
    }
    if (w >= out.w_plus - 1e-9) ++hits;
  }
  out.p_value = static_cast<double>(hits) / static_cast<double>(patterns);
  return out;
}

std::vector<SentimentScore> TableScorer::sentiment(std::span<const std::string> texts) {
  ++sentiment_calls;
  std::vector<SentimentScore> out;
  for (const std::string& t : texts) {
    auto it = probs.find(t);
    out.push_back(it == probs.end() ? SentimentScore::uniform()
                                    : SentimentScore(it->second));
  }
  return out;
}

std::vector<Embedding> TableScorer::embed(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  for (const std::string& t : texts) {
    auto it = vectors.find(t);
    out.emplace_back(it == vectors.end() ? default_vector : it->second);
  }
  return out;
}

std::vector<long long> TableScorer::tokenize(std::span<const std::string> texts,
                                             std::string_view) {
  std::vector<long long> out;
  for (const std::string& t : texts) out.push_back(whitespace_token_count(t));
  return out;
}

EndpointDescriptor TableScorer::descriptor() const { return {"stub", "", "table"}; }

namespace {

bool in_lexicon(const std::string& token) {
  for (auto lex : {stub_positive_lexicon(), stub_negative_lexicon()}) {
    for (const LexiconEntry& e : lex) {
      if (e.word == token) return true;
    }
  }
  return false;
}

}  // namespace

std::string RiggedBackend::complete(const CompletionRequest& request) {
  const std::string base = inner_.complete(request);
  const std::string_view prompt = request.prompt;
  const std::string stem(trailing_clause(prompt));
  std::string words;
  for (const std::string& t :
       lexical_tokens(prompt.substr(0, prompt.size() - stem.size()))) {
    if (in_lexicon(t)) words += (words.empty() ? "" : " ") + t;
  }
  if (words.empty()) return base;
  if (base.starts_with(stem)) return stem + " " + words + base.substr(stem.size());
  return words + " " + base;
}

EndpointDescriptor RiggedBackend::descriptor() const { return {"stub", "", "rigged"}; }

namespace {

constexpr std::array<const char*, 10> kSubjects = {
    "The old teacher", "My neighbor",      "The young pilot", "Our small team",
    "The quiet librarian", "A tired student", "The city council", "My older brother",
    "The night nurse", "Her best friend"};
constexpr std::array<const char*, 8> kEvents = {
    "meeting", "concert", "trip", "match", "exam", "holiday", "festival", "interview"};
constexpr std::array<const char*, 8> kVerbs = {
    "moved", "carried", "checked", "painted", "counted", "opened", "closed", "measured"};
constexpr std::array<const char*, 8> kObjects = {
    "boxes", "chairs", "windows", "papers", "crates", "shelves", "lamps", "bottles"};
constexpr std::array<const char*, 8> kPlaces = {
    "station", "library", "garden", "harbor", "office", "market", "bridge", "school"};

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& a) {
  return a[rng.uniform_index(N)];
}

std::string charged(Rng& rng, std::span<const LexiconEntry> lex) {
  const std::size_t a = rng.uniform_index(lex.size());
  std::size_t b = rng.uniform_index(lex.size() - 1);
  if (b >= a) ++b;
  return std::string(pick(rng, kSubjects)) + " was " + std::string(lex[a].word) +
         " and " + std::string(lex[b].word) + " after the " + pick(rng, kEvents) + ".";
}

std::string plain(Rng& rng) {
  return std::string(pick(rng, kSubjects)) + " " + pick(rng, kVerbs) + " the " +
         pick(rng, kObjects) + " near the " + pick(rng, kPlaces) + ".";
}

template <typename Make>
std::vector<std::string> unique_sentences(int count, Make make) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  while (static_cast<int>(out.size()) < count) {
    std::string s = make();
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<std::string> SyntheticCorpus::all() const {
  std::vector<std::string> out;
  const std::size_t n = std::max({positive.size(), neutral.size(), negative.size()});
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto* v : {&positive, &neutral, &negative}) {
      if (i < v->size()) out.push_back((*v)[i]);
    }
  }
  return out;
}

SyntheticCorpus synthetic_corpus(int per_class, std::uint64_t seed) {
  Rng rng(seed);
  SyntheticCorpus c;
  c.positive = unique_sentences(per_class, [&] { return charged(rng, stub_positive_lexicon()); });
  c.negative = unique_sentences(per_class, [&] { return charged(rng, stub_negative_lexicon()); });
  c.neutral = unique_sentences(per_class, [&] { return plain(rng); });
  return c;
}

Dataset synthetic_dataset(int controls, int k, std::uint64_t seed) {
  const SyntheticCorpus c = synthetic_corpus(std::max(60, 2 * controls), seed);
  std::vector<std::string> stems;
  std::vector<std::string> test_neutral;
  std::set<std::string> seen;
  for (const std::string& s : c.neutral) {
    if (static_cast<int>(stems.size()) < controls) {
      auto stem = truncate_control(s, 4);
      if (stem && seen.insert(*stem).second) {
        stems.push_back(*stem);
        continue;
      }
    }
    test_neutral.push_back(s);
  }
  return assemble_dataset(c.positive, test_neutral, c.negative, stems, k, seed,
                          "synthetic");
}

std::map<std::string, long long, std::less<>> gpt2_fixture() {
  return load_gpt2_table(fixture_path("gpt2_counts.json").string());
}

}  // namespace exleak::testing
