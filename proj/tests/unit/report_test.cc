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
#include "exleak/report.h"

#include <gtest/gtest.h>

#include <algorithm>

#include "exleak/errors.h"
#include "test_support.h"

namespace exleak {
namespace {

namespace fs = std::filesystem;

const Dataset& curated() {
  static const Dataset d = load_dataset(testing::fixture_path("curated.json"));
  return d;
}

GenerationConfig config() {
  GenerationConfig c;
  c.samples_per_prompt = 2;
  c.seed = 3;
  return c;
}

std::size_t line_count(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

class FlakyBackend : public Backend {
 public:
  explicit FlakyBackend(int ok_calls) : ok_calls_(ok_calls) {}
  std::string complete(const CompletionRequest& r) override {
    if (calls_++ >= ok_calls_) throw TransportError("connection refused");
    return inner_.complete(r);
  }
  EndpointDescriptor descriptor() const override { return inner_.descriptor(); }

 private:
  int ok_calls_;
  std::atomic<int> calls_{0};
  StubBackend inner_;
};

TEST(RunPipelineTest, WritesEveryOutputFile) {
  testing::TempDir dir;
  StubBackend backend;
  StubScorer scorer;
  const RunResults r = run_pipeline(curated(), config(), backend, scorer, dir.path());
  for (const char* f : {kManifestFile, kGenerationsFile, kResultsFile, kOutcomesFile, kPerLabelFile}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_EQ(r.outcomes.size(), 6u);
  EXPECT_EQ(line_count(read_file(dir / kGenerationsFile)), 16u);
  EXPECT_EQ(line_count(read_file(dir / kOutcomesFile)), 7u);
  EXPECT_TRUE(read_file(dir / kPerLabelFile).starts_with("label,n,el_rate,l_rate\n"));
  EXPECT_FALSE(read_json_file(dir / kManifestFile)["timestamp"].get<std::string>().empty());
}

TEST(RunPipelineTest, ResumeIsByteIdenticalWithoutBackendCalls) {
  testing::TempDir dir;
  StubBackend backend;
  StubScorer scorer;
  run_pipeline(curated(), config(), backend, scorer, dir.path());
  const std::string first = read_file(dir / kResultsFile);
  std::atomic<long long> calls{0};
  run_pipeline(curated(), config(), backend, scorer, dir.path(), {.backend_calls = &calls});
  EXPECT_EQ(calls.load(), 0);
  EXPECT_EQ(read_file(dir / kResultsFile), first);

  testing::TempDir fresh;
  run_pipeline(curated(), config(), backend, scorer, fresh.path());
  EXPECT_EQ(read_file(fresh / kResultsFile), first);
}

TEST(RunPipelineTest, MismatchedManifestIsAConfigError) {
  testing::TempDir dir;
  StubBackend backend;
  StubScorer scorer;
  run_pipeline(curated(), config(), backend, scorer, dir.path());
  GenerationConfig other = config();
  other.top_p = 0.5;
  try {
    run_pipeline(curated(), other, backend, scorer, dir.path());
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "setup");
    EXPECT_EQ(e.code(), ExitCode::kConfig);
    EXPECT_NE(std::string(e.what()).find("generation"), std::string::npos) << e.what();
  }
}

TEST(RunPipelineTest, BackendFailureKeepsPartialCheckpointAndResumes) {
  testing::TempDir dir;
  StubScorer scorer;
  FlakyBackend flaky(5);
  try {
    run_pipeline(curated(), config(), flaky, scorer, dir.path(), {.max_in_flight = 1});
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "generate");
    EXPECT_EQ(e.code(), ExitCode::kTransport);
  }
  EXPECT_EQ(load_checkpoint(dir / kGenerationsFile).size(), 4u);
  EXPECT_FALSE(fs::exists(dir / kResultsFile));

  StubBackend backend;
  std::atomic<long long> calls{0};
  run_pipeline(curated(), config(), backend, scorer, dir.path(), {.backend_calls = &calls});
  EXPECT_EQ(calls.load(), 12);

  testing::TempDir clean;
  run_pipeline(curated(), config(), backend, scorer, clean.path());
  EXPECT_EQ(read_file(dir / kResultsFile), read_file(clean / kResultsFile));
}

TEST(ResultsJsonTest, RoundTripAndVersionGate) {
  testing::TempDir dir;
  StubBackend backend;
  StubScorer scorer;
  const RunResults r = run_pipeline(curated(), config(), backend, scorer, dir.path());
  const Json j = results_to_json(r);
  EXPECT_EQ(results_to_json(results_from_json(j)).dump(), j.dump());
  EXPECT_FALSE(j["manifest"].contains("timestamp"));
  EXPECT_EQ(load_results(dir / kResultsFile).outcomes, r.outcomes);

  Json newer = j;
  newer["schema_version"] = 999;
  EXPECT_THROW(results_from_json(newer), VersionError);
  Json broken = j;
  broken.erase("summary");
  EXPECT_THROW(results_from_json(broken), SchemaError);
}

TEST(SummarizeOutcomesTest, AllZeroDiffsLeaveNoTest) {
  std::vector<LeakageOutcome> os;
  for (ExpressionLabel l : kAllLabels) {
    LeakageOutcome o;
    o.sample_id = "s";
    o.label = l;
    os.push_back(o);
  }
  const RunResults r = summarize_outcomes({}, os);
  EXPECT_FALSE(r.wilcoxon.has_value());
  EXPECT_FALSE(r.significant);
  EXPECT_FALSE(r.wilcoxon_note.empty());
  EXPECT_EQ(results_to_json(r)["wilcoxon"], Json(nullptr));
}

TEST(SummarizeOutcomesTest, StrongPositiveDiffsAreSignificant) {
  std::vector<LeakageOutcome> os;
  for (int i = 0; i < 40; ++i) {
    LeakageOutcome o;
    o.sample_id = "s" + std::to_string(i);
    o.label = i % 2 ? ExpressionLabel::kPositive : ExpressionLabel::kNegative;
    o.el = 1;
    o.paired_diff = 0.01 * (i + 1);
    os.push_back(o);
  }
  const RunResults r = summarize_outcomes({}, os);
  ASSERT_TRUE(r.wilcoxon.has_value());
  EXPECT_EQ(r.wilcoxon->n_effective, 40);
  EXPECT_TRUE(r.significant);
  EXPECT_DOUBLE_EQ(r.summary.mu_el, 1.0);
}

TEST(FormatTest, RatesAndPValues) {
  EXPECT_EQ(format_rate(0.5), "0.50");
  EXPECT_EQ(format_rate(0.756), "0.76");
  EXPECT_EQ(format_p(std::nullopt), "n/a");
  WilcoxonResult w;
  w.p_value = 1.34e-15;
  EXPECT_EQ(format_p(w), "1.34e-15");
}

TEST(RenderReportTest, OneRowPerRunAndPerLabel) {
  testing::TempDir a;
  testing::TempDir b;
  StubBackend backend;
  StubScorer scorer;
  std::vector<RunResults> runs;
  runs.push_back(run_pipeline(curated(), config(), backend, scorer, a.path()));
  GenerationConfig bare = config();
  bare.instruction_mode = InstructionMode::kBare;
  runs.push_back(run_pipeline(curated(), bare, backend, scorer, b.path()));
  const ReportTables t = render_report(runs);
  EXPECT_EQ(line_count(t.leakage_csv), 3u);
  EXPECT_EQ(line_count(t.per_label_csv), 7u);
  EXPECT_TRUE(t.leakage_csv.starts_with("model,dataset,mode,mu_L,mu_EL,W_EL_p,significant\n"));
  EXPECT_NE(t.leakage_text.find("bare"), std::string::npos);
  EXPECT_NE(t.per_label_text.find("neutral"), std::string::npos);
}

}  // namespace
}  // namespace exleak
