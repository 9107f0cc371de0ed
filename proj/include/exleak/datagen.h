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
#ifndef EXLEAK_DATAGEN_H_
#define EXLEAK_DATAGEN_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exleak/core.h"
#include "exleak/scoring.h"

namespace exleak {

struct DatagenConfig {
  int m = 100;  // top pool size per label
  int n = 50;   // draws per label, n <= m
  int k = 8;    // pairing rounds
  double neutral_split_ratio = 0.5;
  int truncate_words = 4;
  std::uint64_t seed = 0;
  int min_sentence_chars = 20;
  int max_sentence_chars = 200;
  // Scoring fan-out: corpus batches of batch_size, at most max_in_flight
  // outstanding.
  int batch_size = 64;
  int max_in_flight = 4;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct ScoredSentence {
  std::string text;
  SentimentScore score;
  ExpressionLabel argmax;
};

struct ScoredCorpus {
  std::vector<ScoredSentence> sentences;  // input order
  std::size_t dropped_length = 0;
  std::size_t dropped_control_chars = 0;
  std::size_t dropped_duplicates = 0;

  std::size_t dropped() const {
    return dropped_length + dropped_control_chars + dropped_duplicates;
  }
};

// One sentence per line, or JSON lines with a "text" field (detected from a
// .jsonl extension or a leading '{'). Blank lines are skipped.
std::vector<std::string> read_corpus(const std::filesystem::path& path);

// Filters (length bounds, control characters, exact duplicates) and scores
// the corpus. Throws ArgumentError for an empty corpus and
// InsufficientDataError when the filters leave nothing.
ScoredCorpus score_corpus(std::span<const std::string> corpus, Scorer& scorer,
                          const DatagenConfig& cfg);

struct Pool {
  std::vector<ScoredSentence> items;
  bool short_pool = false;  // fewer than m candidates were available
};

// Top-m by score[label], descending, ties by text ascending.
Pool select_pool(std::span<const ScoredSentence> scored, ExpressionLabel label,
                 int m);

// n draws without replacement, each proportional to score[label] among the
// remaining items. Output is in draw order.
std::vector<ScoredSentence> weighted_sample(
    std::span<const ScoredSentence> pool, ExpressionLabel label, int n,
    std::uint64_t seed);

struct NeutralPartition {
  std::vector<ScoredSentence> test_neutral;
  std::vector<ScoredSentence> control_source;
};

// Seeded shuffle, then the first round(ratio * size) items become control
// sources, clamped so both sides keep at least one item.
NeutralPartition partition_neutral(std::span<const ScoredSentence> neutral,
                                   double ratio, std::uint64_t seed);

// First truncate_words words with trailing . ! ? , ; : removed; nullopt when
// the sentence is too short (or nothing survives the strip).
std::optional<std::string> truncate_control(std::string_view sentence,
                                            int truncate_words);

// k rounds; in each, every control is paired with one sentence per label.
// For a given control and label, rounds walk a seeded permutation of the
// pool, so pairs only repeat once k exceeds the pool size.
Dataset assemble_dataset(std::span<const std::string> positive,
                         std::span<const std::string> neutral,
                         std::span<const std::string> negative,
                         std::span<const std::string> controls, int k,
                         std::uint64_t seed, std::string name = "aexl");

struct DatagenReport {
  std::size_t corpus_size = 0;
  std::size_t retained = 0;
  std::size_t dropped = 0;
  std::array<std::size_t, 3> pool_sizes{};
  std::array<bool, 3> short_pool{};
  std::size_t controls = 0;
  std::size_t controls_skipped = 0;
  std::size_t test_neutral = 0;
};

// Scores, selects, samples, splits, truncates and assembles.
Dataset generate_dataset(std::span<const std::string> corpus, Scorer& scorer,
                         const DatagenConfig& cfg, std::string name,
                         DatagenReport* report = nullptr);

}  // namespace exleak

#endif  // EXLEAK_DATAGEN_H_
