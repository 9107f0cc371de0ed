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
#include "exleak/serialize.h"

#include <gtest/gtest.h>

#include <algorithm>

#include "exleak/errors.h"
#include "exleak/random.h"
#include "test_support.h"

namespace exleak {
namespace {

using L = ExpressionLabel;

Json curated_json() { return read_json_file(testing::fixture_path("curated.json")); }

TEST(DatasetJsonTest, CuratedRoundTripsToAnEqualDataset) {
  const Dataset d = load_dataset(testing::fixture_path("curated.json"));
  const Dataset again = dataset_from_json(Json::parse(serialize_dataset(d)));
  EXPECT_EQ(d, again);
  EXPECT_EQ(serialize_dataset(d), serialize_dataset(again));
}

TEST(DatasetJsonTest, FixtureFileIsAlreadyCanonical) {
  const Dataset d = load_dataset(testing::fixture_path("curated.json"));
  EXPECT_EQ(serialize_dataset(d), read_file(testing::fixture_path("curated.json")));
}

TEST(DatasetJsonTest, SampleOrderDoesNotChangeTheBytes) {
  const Dataset base = testing::synthetic_dataset(6, 3, 11);
  const std::string canonical = serialize_dataset(base);
  Json j = dataset_to_json(base);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Json> samples(j["samples"].begin(), j["samples"].end());
    rng.shuffle(std::span<Json>(samples));
    for (Json& s : samples) {
      std::vector<Json> tests(s["tests"].begin(), s["tests"].end());
      rng.shuffle(std::span<Json>(tests));
      s["tests"] = tests;
    }
    j["samples"] = samples;
    EXPECT_EQ(serialize_dataset(dataset_from_json(j)), canonical);
  }
}

TEST(DatasetJsonTest, StoredFullPromptIsRejected) {
  Json j = curated_json();
  j["samples"][1]["tests"][0]["full_prompt"] = "x";
  try {
    dataset_from_json(j);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("samples[1].tests[0].full_prompt"), std::string::npos)
        << e.what();
  }
}

TEST(DatasetJsonTest, ErrorsNameTheOffendingField) {
  Json j = curated_json();
  j["samples"][0]["tests"][2]["label"] = "joyous";
  try {
    dataset_from_json(j);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("samples[0].tests[2].label"), std::string::npos)
        << e.what();
  }
  j = curated_json();
  j["samples"][1].erase("control_prompt");
  EXPECT_THROW(dataset_from_json(j), SchemaError);
  j = curated_json();
  j["samples"][1]["id"] = j["samples"][0]["id"];
  EXPECT_THROW(dataset_from_json(j), IntegrityError);
  j = curated_json();
  j["samples"][0]["tests"].erase(0);
  EXPECT_THROW(dataset_from_json(j), IntegrityError);
}

TEST(DatasetJsonTest, ProvenanceAcceptsStringOrObject) {
  Json j = curated_json();
  j["samples"][0]["provenance"] = "generated";
  j["samples"][1]["provenance"] = {{"kind", "generated"}, {"source", "corpus line 4"}};
  const Dataset d = dataset_from_json(j);
  EXPECT_EQ(d.samples()[0].provenance().kind, ProvenanceKind::kGenerated);
  EXPECT_EQ(d.samples()[1].provenance().source, "corpus line 4");
}

TEST(DatasetJsonTest, HashFollowsContent) {
  const Dataset d = load_dataset(testing::fixture_path("curated.json"));
  Json j = curated_json();
  j["samples"][0]["control_prompt"] = "Her passion was";
  EXPECT_NE(dataset_sha256(d), dataset_sha256(dataset_from_json(j)));
  EXPECT_EQ(dataset_sha256(d), sha256_hex(serialize_dataset(d)));
}

TEST(RecordJsonTest, RoundTrips) {
  GenerationRecord r;
  r.sample_id = "s1";
  r.prompt_kind = PromptKind::kTest;
  r.label = L::kNegative;
  r.sample_index = 3;
  r.seed = 2147483647ULL;
  r.raw_text = "Her passion is bright. More";
  r.cleaned_text = "bright.";
  r.sentiment = SentimentScore({0.1, 0.2, 0.7});
  r.embedding = Embedding({0.5, -0.25});
  EXPECT_EQ(record_from_json(record_to_json(r)), r);
  r.label.reset();
  r.prompt_kind = PromptKind::kControl;
  r.sentiment.reset();
  r.embedding.reset();
  EXPECT_EQ(record_from_json(Json::parse(record_to_json(r).dump())), r);
}

TEST(ManifestJsonTest, RoundTripsAndRejectsNewerVersions) {
  RunManifest m;
  m.dataset_name = "curated";
  m.dataset_sha256 = "ab";
  m.generation.seed = 42;
  m.generation.instruction_mode = InstructionMode::kBare;
  m.backend = {"native", "http://127.0.0.1:9000", ""};
  m.scorer = {"stub", "", "lexicon-v1;dim=16"};
  m.splitter_version = "rule-split-v1";
  m.timestamp = "2026-10-18T00:00:00Z";
  const RunManifest back = manifest_from_json(manifest_to_json(m));
  EXPECT_TRUE(back.same_run(m));
  EXPECT_EQ(back.timestamp, m.timestamp);
  Json newer = manifest_to_json(m);
  newer["schema_version"] = kResultsSchemaVersion + 1;
  EXPECT_THROW(manifest_from_json(newer), VersionError);
}

TEST(OutcomeCsvTest, HasFixedHeaderAndOneRowPerOutcome) {
  LeakageOutcome o;
  o.sample_id = "s1";
  o.label = L::kPositive;
  o.el = 1;
  o.paired_diff = 0.5;
  o.sem_l = 0.5;
  o.sim_test = 0.25;
  o.sim_ctl = 0.25;
  const std::vector<LeakageOutcome> rows = {o, o};
  const std::string csv = outcomes_to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "sample_id,label,el,paired_diff,sem_l,sim_test,sim_ctl");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find("s1,positive,1,0.5,0.5,0.25,0.25"), std::string::npos);
  EXPECT_EQ(outcome_from_json(outcome_to_json(o)).paired_diff, 0.5);
}

TEST(FormatTest, ShortestRoundTripDecimal) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(0.75), "0.75");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Sha256Test, KnownVectors) {
  EXPECT_EQ(sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(FileTest, WriteIsAtomicAndReadable) {
  testing::TempDir dir;
  write_file(dir / "a.txt", "one");
  write_file(dir / "a.txt", "two");
  EXPECT_EQ(read_file(dir / "a.txt"), "two");
  EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir.path()),
                          std::filesystem::directory_iterator()),
            1);
  EXPECT_THROW(read_file(dir / "missing.txt"), IoError);
  write_file(dir / "bad.json", "{");
  EXPECT_THROW(read_json_file(dir / "bad.json"), SchemaError);
}

}  // namespace
}  // namespace exleak
