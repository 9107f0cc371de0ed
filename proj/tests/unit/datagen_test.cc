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
#include "exleak/datagen.h"

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "exleak/errors.h"
#include "exleak/serialize.h"
#include "test_support.h"

namespace exleak {
namespace {

using L = ExpressionLabel;

ScoredSentence scored(std::string text, std::array<double, 3> p) {
  SentimentScore s(p);
  return ScoredSentence{std::move(text), s, s.argmax()};
}

TEST(DatagenConfigTest, RejectsOutOfRangeFields) {
  DatagenConfig c;
  EXPECT_NO_THROW(c.validate());
  c.n = c.m + 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.neutral_split_ratio = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.truncate_words = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.k = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(TruncateControlTest, KeepsLeadingWordsAndStripsPunctuation) {
  EXPECT_EQ(truncate_control("I walked down the hallway.", 4), "I walked down the");
  EXPECT_EQ(truncate_control("Her  passion is, quite simply, music.", 3), "Her passion is");
  EXPECT_EQ(truncate_control("Wait, what? No.", 2), "Wait, what");
  EXPECT_EQ(truncate_control("Too short.", 4), std::nullopt);
  EXPECT_EQ(truncate_control("... !! ?? ;;", 4), std::nullopt);
}

TEST(SelectPoolTest, TopMByLabelScoreWithTextTieBreak) {
  const std::vector<ScoredSentence> in = {
      scored("b", {0.1, 0.3, 0.6}), scored("a", {0.1, 0.3, 0.6}), scored("c", {0.2, 0.2, 0.6 }),
      scored("d", {0.5, 0.3, 0.2}), scored("e", {0.1, 0.1, 0.8})};
  const Pool p = select_pool(in, L::kPositive, 3);
  ASSERT_EQ(p.items.size(), 3u);
  EXPECT_EQ(p.items[0].text, "e");
  EXPECT_EQ(p.items[1].text, "a");
  EXPECT_EQ(p.items[2].text, "b");
  EXPECT_FALSE(p.short_pool);
  EXPECT_TRUE(select_pool(in, L::kPositive, 10).short_pool);
  EXPECT_THROW(select_pool(in, L::kPositive, 0), ArgumentError);
}

TEST(WeightedSampleTest, DrawsWithoutReplacement) {
  std::vector<ScoredSentence> pool;
  for (int i = 0; i < 10; ++i) {
    pool.push_back(scored("s" + std::to_string(i), {0.1, 0.1 + 0.05 * i, 0.8 - 0.05 * i}));
  }
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto draw = weighted_sample(pool, L::kPositive, 10, seed);
    std::set<std::string> seen;
    for (const auto& s : draw) seen.insert(s.text);
    EXPECT_EQ(seen.size(), 10u);
  }
  EXPECT_THROW(weighted_sample(pool, L::kPositive, 11, 0), ArgumentError);
  EXPECT_EQ(weighted_sample(pool, L::kPositive, 3, 5).size(), 3u);
  const auto a = weighted_sample(pool, L::kPositive, 4, 99);
  const auto b = weighted_sample(pool, L::kPositive, 4, 99);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].text, b[i].text);
}

TEST(WeightedSampleTest, ZeroWeightsAreDegenerate) {
  const std::vector<ScoredSentence> pool = {scored("a", {0.5, 0.5, 0.0}),
                                            scored("b", {0.0, 1.0, 0.0})};
  EXPECT_THROW(weighted_sample(pool, L::kPositive, 1, 0), DegenerateError);
}

TEST(WeightedSampleTest, NearZeroWeightIsAlmostNeverDrawnFirst) {
  const std::vector<ScoredSentence> pool = {scored("A", {0.0, 1e-6, 0.999999}),
                                            scored("B", {0.0, 0.999999, 1e-6})};
  int a_first = 0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    if (weighted_sample(pool, L::kPositive, 1, seed)[0].text == "A") ++a_first;
  }
  EXPECT_GE(a_first, 1996);
}

TEST(WeightedSampleTest, FirstDrawFrequencyMatchesWeights) {
  const std::vector<ScoredSentence> pool = {scored("A", {0.1, 0.2, 0.7}),
                                            scored("B", {0.3, 0.4, 0.3})};
  int a_first = 0;
  constexpr int kSeeds = 10000;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    if (weighted_sample(pool, L::kPositive, 1, seed)[0].text == "A") ++a_first;
  }
  EXPECT_NEAR(static_cast<double>(a_first) / kSeeds, 0.7, 0.01);
}

TEST(PartitionNeutralTest, SplitsByRatioWithClamp) {
  std::vector<ScoredSentence> neutral;
  for (int i = 0; i < 10; ++i) neutral.push_back(scored("n" + std::to_string(i), {0.2, 0.6, 0.2}));
  const auto half = partition_neutral(neutral, 0.5, 3);
  EXPECT_EQ(half.control_source.size(), 5u);
  EXPECT_EQ(half.test_neutral.size(), 5u);
  const auto tiny = partition_neutral(neutral, 0.01, 3);
  EXPECT_EQ(tiny.control_source.size(), 1u);
  const auto big = partition_neutral(neutral, 0.99, 3);
  EXPECT_EQ(big.test_neutral.size(), 1u);
  std::set<std::string> all;
  for (const auto& s : half.control_source) all.insert(s.text);
  for (const auto& s : half.test_neutral) all.insert(s.text);
  EXPECT_EQ(all.size(), 10u);
  EXPECT_THROW(partition_neutral(std::span(neutral).first(1), 0.5, 3), InsufficientDataError);
}

TEST(AssembleDatasetTest, IdsCountsAndNoEarlyRepeats) {
  const std::vector<std::string> pos = {"P1.", "P2.", "P3."};
  const std::vector<std::string> neu = {"N1.", "N2.", "N3."};
  const std::vector<std::string> neg = {"G1.", "G2.", "G3."};
  const std::vector<std::string> controls = {"Stem one", "Stem two"};
  const Dataset d = assemble_dataset(pos, neu, neg, controls, 3, 17, "mini");
  ASSERT_EQ(d.size(), 6u);
  EXPECT_EQ(d.samples()[0].id(), "mini-r00-c0000");
  EXPECT_NE(d.find("mini-r02-c0001"), nullptr);
  for (const std::string& stem : controls) {
    std::set<std::string> pos_seen;
    for (const PromptSample& s : d.samples()) {
      if (s.control_prompt() == stem) pos_seen.insert(s.test(L::kPositive).injected_sentence);
    }
    EXPECT_EQ(pos_seen.size(), 3u);
  }
  EXPECT_THROW(assemble_dataset(pos, neu, {}, controls, 1, 0), InsufficientDataError);
  EXPECT_THROW(assemble_dataset(pos, neu, neg, {}, 1, 0), InsufficientDataError);
}

TEST(AssembleDatasetTest, WiderPaddingForManyRounds) {
  const std::vector<std::string> one = {"X."};
  const std::vector<std::string> controls = {"Stem"};
  const Dataset d = assemble_dataset(one, one, one, controls, 120, 1, "w");
  EXPECT_NE(d.find("w-r119-c0000"), nullptr);
}

DatagenConfig synth_config() {
  DatagenConfig c;
  c.m = 40;
  c.n = 30;
  c.k = 3;
  c.seed = 5;
  return c;
}

TEST(GenerateDatasetTest, DeterministicAndLabelValid) {
  const auto corpus = testing::synthetic_corpus(50, 3).all();
  StubScorer scorer;
  DatagenReport rep;
  const Dataset a = generate_dataset(corpus, scorer, synth_config(), "synth", &rep);
  const Dataset b = generate_dataset(corpus, scorer, synth_config(), "synth");
  EXPECT_EQ(dataset_to_json(a).dump(), dataset_to_json(b).dump());
  EXPECT_EQ(a.size(), 3 * rep.controls);
  EXPECT_EQ(rep.corpus_size, 150u);
  EXPECT_GT(rep.controls, 5u);
  for (const PromptSample& s : a.samples()) {
    for (const TestPrompt& t : s.tests()) {
      EXPECT_EQ(scorer.score_one(t.injected_sentence).argmax(), t.label) << t.injected_sentence;
    }
    ASSERT_TRUE(s.provenance().source.has_value());
    EXPECT_TRUE(s.provenance().source->starts_with(s.control_prompt()));
  }
  DatagenConfig other = synth_config();
  other.seed = 6;
  EXPECT_NE(dataset_to_json(generate_dataset(corpus, scorer, other, "synth")).dump(),
            dataset_to_json(a).dump());
}

TEST(ScoreCorpusTest, FiltersAndPreservesOrder) {
  std::vector<std::string> corpus;
  for (int i = 0; i < 150; ++i) corpus.push_back("Sentence number " + std::to_string(i) + " is fine.");
  corpus.push_back("short");
  corpus.push_back("Sentence number 3 is fine.");
  corpus.push_back("Has a control\x01 character in it.");
  DatagenConfig cfg;
  cfg.batch_size = 7;
  cfg.max_in_flight = 3;
  testing::TableScorer scorer;
  const ScoredCorpus sc = score_corpus(corpus, scorer, cfg);
  ASSERT_EQ(sc.sentences.size(), 150u);
  for (int i = 0; i < 150; ++i) EXPECT_EQ(sc.sentences[i].text, corpus[i]);
  EXPECT_EQ(sc.dropped_length, 1u);
  EXPECT_EQ(sc.dropped_duplicates, 1u);
  EXPECT_EQ(sc.dropped_control_chars, 1u);
  EXPECT_EQ(scorer.sentiment_calls.load(), 22);
  EXPECT_THROW(score_corpus(std::vector<std::string>{}, scorer, cfg), ArgumentError);
  EXPECT_THROW(score_corpus(std::vector<std::string>{"tiny"}, scorer, cfg), InsufficientDataError);
}

TEST(ReadCorpusTest, TextAndJsonLines) {
  testing::TempDir dir;
  write_file(dir / "c.txt", "  first line here  \n\nsecond line\r\n");
  EXPECT_EQ(read_corpus(dir / "c.txt"), (std::vector<std::string>{"first line here", "second line"}));
  write_file(dir / "c.jsonl", "{\"text\": \"alpha\"}\n{\"text\": \"beta\", \"id\": 2}\n");
  EXPECT_EQ(read_corpus(dir / "c.jsonl"), (std::vector<std::string>{"alpha", "beta"}));
  write_file(dir / "bad.jsonl", "{\"text\": \"alpha\"}\n{\"nope\": 1}\n");
  EXPECT_THROW(read_corpus(dir / "bad.jsonl"), SchemaError);
  EXPECT_THROW(read_corpus(dir / "missing.txt"), IoError);
}

}  // namespace
}  // namespace exleak
