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
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "exleak/serialize.h"
#include "test_support.h"

namespace exleak {
namespace {

// Runs the CLI with the given arguments, output discarded, and returns its
// exit status.
int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = "env -u EXLEAK_BACKEND -u EXLEAK_SCORER " + env + " '" +
                          std::string(EXLEAK_CLI_PATH) + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string curated() { return testing::fixture_path("curated.json").string(); }

TEST(CliTest, RunSucceedsAndIsByteStable) {
  testing::TempDir a;
  testing::TempDir b;
  const std::string common = " --dataset " + curated() + " --samples 2 --backend stub --scorer stub";
  ASSERT_EQ(run_cli("run --out " + a.path().string() + common), 0);
  ASSERT_EQ(run_cli("run --out " + b.path().string() + common), 0);
  EXPECT_EQ(read_file(a / "results.json"), read_file(b / "results.json"));
  EXPECT_EQ(run_cli("run --out " + a.path().string() + common), 0);
  EXPECT_EQ(run_cli("report " + a.path().string() + " " + b.path().string()), 0);
}

TEST(CliTest, EnvironmentSuppliesEndpoints) {
  testing::TempDir dir;
  EXPECT_EQ(run_cli("run --out " + dir.path().string() + " --dataset " + curated() + " --samples 1",
                    "EXLEAK_BACKEND=stub EXLEAK_SCORER=stub"),
            0);
}

TEST(CliTest, MissingScorerIsAConfigExit) {
  testing::TempDir dir;
  EXPECT_EQ(run_cli("run --out " + dir.path().string() + " --dataset " + curated() +
                    " --backend stub"),
            2);
  EXPECT_EQ(run_cli("run --no-such-flag"), 2);
}

TEST(CliTest, UnreachableBackendIsATransportExit) {
  testing::TempDir dir;
  EXPECT_EQ(run_cli("run --out " + dir.path().string() + " --dataset " + curated() +
                    " --samples 1 --scorer stub --backend http://127.0.0.1:1 --retries 1 "
                    "--timeout 1"),
            3);
}

TEST(CliTest, CorruptDatasetIsAnIntegrityExit) {
  testing::TempDir dir;
  Json j = read_json_file(testing::fixture_path("curated.json"));
  j["samples"][0]["tests"].erase(0);
  write_file(dir / "broken.json", j.dump());
  EXPECT_EQ(run_cli("validate --kind dataset " + (dir / "broken.json").string()), 4);
  EXPECT_EQ(run_cli("validate --kind dataset " + curated()), 0);
}

TEST(CliTest, DatagenStatsAndConformance) {
  testing::TempDir dir;
  std::string corpus;
  for (const std::string& s : testing::synthetic_corpus(40, 8).all()) corpus += s + "\n";
  write_file(dir / "corpus.txt", corpus);
  ASSERT_EQ(run_cli("datagen --corpus " + (dir / "corpus.txt").string() + " --out " +
                    (dir / "d.json").string() + " --m 30 --n 20 --k 2 --scorer stub"),
            0);
  EXPECT_EQ(run_cli("validate --kind dataset " + (dir / "d.json").string()), 0);
  EXPECT_EQ(run_cli("stats --dataset " + (dir / "d.json").string() +
                    " --tokenizer whitespace --out " + dir.path().string()),
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "lengths.csv"));
  write_file(dir / "diffs.txt", "1 2 3 4 5\n");
  EXPECT_EQ(run_cli("stats --diffs " + (dir / "diffs.txt").string()), 0);
  EXPECT_EQ(run_cli("conformance"), 0);
}

}  // namespace
}  // namespace exleak
