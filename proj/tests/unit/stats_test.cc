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
#include "exleak/stats.h"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "exleak/errors.h"
#include "exleak/random.h"
#include "test_support.h"

namespace exleak {
namespace {

using L = ExpressionLabel;

TEST(WilcoxonTest, AllPositiveSmallSample) {
  const std::vector<double> d = {1, 2, 3, 4, 5};
  const WilcoxonResult r = wilcoxon_one_sided(d);
  EXPECT_EQ(r.n_effective, 5);
  EXPECT_DOUBLE_EQ(r.w_plus, 15.0);
  EXPECT_DOUBLE_EQ(r.p_value, 0.03125);
  EXPECT_EQ(r.method, WilcoxonMethod::kExact);
}

TEST(WilcoxonTest, AllNegativeGivesPOne) {
  const std::vector<double> d = {-1, -2, -3};
  const WilcoxonResult r = wilcoxon_one_sided(d);
  EXPECT_DOUBLE_EQ(r.w_plus, 0.0);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0);
}

TEST(WilcoxonTest, ZerosAreDiscarded) {
  const std::vector<double> d = {0, 1, 0, 2, 3, 4, 5};
  EXPECT_EQ(wilcoxon_one_sided(d).n_effective, 5);
  EXPECT_DOUBLE_EQ(wilcoxon_one_sided(d).p_value, 0.03125);
  const std::vector<double> zeros = {0, 0, 0};
  EXPECT_THROW(wilcoxon_one_sided(zeros), DegenerateError);
  EXPECT_THROW(wilcoxon_one_sided(std::vector<double>{}), ArgumentError);
  EXPECT_THROW(wilcoxon_one_sided(std::vector<double>{1.0, NAN}), ArgumentError);
}

// Random vectors with heavy ties and zeros, checked against full sign
// enumeration.
std::vector<double> random_diffs(Rng& rng, int n) {
  std::vector<double> d;
  for (int i = 0; i < n; ++i) {
    const double mag = static_cast<double>(rng.uniform_index(5));
    d.push_back(rng.uniform01() < 0.5 ? -mag : mag);
  }
  return d;
}

TEST(WilcoxonTest, ExactPathMatchesBruteForceOracle) {
  Rng rng(2024);
  int checked = 0;
  while (checked < 1000) {
    const std::vector<double> d = random_diffs(rng, 1 + static_cast<int>(rng.uniform_index(12)));
    const testing::OracleWilcoxon want = testing::wilcoxon_bruteforce(d);
    if (want.n == 0) continue;
    const WilcoxonResult got = wilcoxon_one_sided(d);
    ASSERT_EQ(got.n_effective, want.n);
    ASSERT_NEAR(got.w_plus, want.w_plus, 1e-12);
    ASSERT_NEAR(got.p_value, want.p_value, 1e-12);
    ++checked;
  }
}

TEST(WilcoxonTest, ShiftingUpwardNeverRaisesP) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d;
    for (int i = 0; i < 15; ++i) d.push_back(rng.uniform01() * 2.0 - 1.0);
    std::vector<double> up = d;
    for (double& x : up) x = std::fabs(x);
    EXPECT_LE(wilcoxon_one_sided(up).p_value, wilcoxon_one_sided(d).p_value + 1e-15);
  }
}

TEST(WilcoxonTest, SignFlipMirrorsTheStatistic) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> d;
    for (int i = 0; i < 10; ++i) d.push_back(rng.uniform01() * 2.0 - 1.0);
    std::vector<double> flipped = d;
    for (double& x : flipped) x = -x;
    const WilcoxonResult a = wilcoxon_one_sided(d);
    const WilcoxonResult b = wilcoxon_one_sided(flipped);
    EXPECT_NEAR(a.w_plus + b.w_plus, 10.0 * 11.0 / 2.0, 1e-12);
  }
}

// Reference p-values from scipy.stats.wilcoxon(alternative="greater",
// method="approx", correction=True).
TEST(WilcoxonTest, NormalApproximationReferenceValues) {
  std::vector<double> ramp;
  for (int i = 1; i <= 30; ++i) ramp.push_back(i);
  const WilcoxonResult r = wilcoxon_one_sided(ramp);
  EXPECT_EQ(r.method, WilcoxonMethod::kNormalApprox);
  EXPECT_NEAR(r.p_value / 9.126857281806037e-07, 1.0, 1e-6);

  const std::vector<double> mixed = {1,  2,  -3, 4,  5,  -6, 7,  8,   9,  10, 11, 12, -13,
                                     14, 15, 16, 17, 18, 19, 20, 21, 22, -23, 24, 25};
  EXPECT_NEAR(wilcoxon_one_sided(mixed).p_value / 0.0008216529319410192, 1.0, 1e-6);

  const std::vector<double> tied = {1, 1, 1, -2, 2, 2, 3, 3, -3, 4, 4, 4,
                                    5, 5, 5, 6, 6, 6, 7, 7, 7, -8, 8};
  EXPECT_NEAR(wilcoxon_one_sided(tied).p_value / 0.0009432573295643353, 1.0, 1e-6);
}

TEST(WilcoxonTest, ExactBoundaryAtTwentyEffectivePairs) {
  std::vector<double> d;
  for (int i = 1; i <= kWilcoxonExactMaxN; ++i) d.push_back(i % 3 == 0 ? -i : i);
  EXPECT_EQ(wilcoxon_one_sided(d).method, WilcoxonMethod::kExact);
  d.push_back(21);
  EXPECT_EQ(wilcoxon_one_sided(d).method, WilcoxonMethod::kNormalApprox);
}

TEST(WilcoxonTest, LargeInputStaysFast) {
  Rng rng(1);
  std::vector<double> d;
  for (int i = 0; i < 100000; ++i) d.push_back(rng.uniform01() - 0.4);
  const auto t0 = std::chrono::steady_clock::now();
  const WilcoxonResult r = wilcoxon_one_sided(d);
  const auto elapsed = std::chrono::steady_clock::now() - t0;
  EXPECT_LT(r.p_value, 1e-10);
  EXPECT_LT(elapsed, std::chrono::seconds(2));
}

TEST(SignificanceGateTest, StrictlyBelowAlpha) {
  auto with_p = [](double p) {
    WilcoxonResult r;
    r.p_value = p;
    return r;
  };
  EXPECT_TRUE(significance_gate(with_p(1.34e-15)));
  EXPECT_FALSE(significance_gate(with_p(0.03125)));
  EXPECT_FALSE(significance_gate(with_p(0.001)));
  EXPECT_TRUE(significance_gate(with_p(0.04), 0.05));
}

const Dataset& curated() {
  static const Dataset d = load_dataset(testing::fixture_path("curated.json"));
  return d;
}

TEST(LengthSummaryTest, WhitespaceMeansOnCurated) {
  const LengthSummary s = length_summary(curated(), "whitespace", nullptr);
  EXPECT_DOUBLE_EQ(s[index_of(L::kNegative)].mean, 7.0);
  EXPECT_DOUBLE_EQ(s[index_of(L::kNeutral)].mean, 5.5);
  EXPECT_DOUBLE_EQ(s[index_of(L::kPositive)].mean, 7.5);
  EXPECT_EQ(s[index_of(L::kNeutral)].n, 2u);
  EXPECT_NEAR(s[index_of(L::kNegative)].stddev, std::sqrt(2.0), 1e-12);
}

TEST(LengthSummaryTest, Gpt2MeansFromFrozenCounts) {
  StubScorer scorer({.gpt2_table = testing::gpt2_fixture()});
  const LengthSummary s = length_summary(curated(), "gpt2", &scorer);
  EXPECT_DOUBLE_EQ(s[index_of(L::kNegative)].mean, 8.0);
  EXPECT_DOUBLE_EQ(s[index_of(L::kNeutral)].mean, 6.5);
  EXPECT_DOUBLE_EQ(s[index_of(L::kPositive)].mean, 9.5);
}

TEST(LengthSummaryTest, EmptyInputAndCsvShapes) {
  EXPECT_THROW(length_summary(std::span<const PromptSample>(), "whitespace", nullptr),
               InsufficientDataError);
  const LengthSummary s = length_summary(curated(), "whitespace", nullptr);
  const std::string fig = length_summary_csv(s);
  EXPECT_TRUE(fig.starts_with("label,mean,stddev,n\nnegative,7,"));
  const std::string hist = length_histogram_csv(s);
  EXPECT_NE(hist.find("neutral,5,1\n"), std::string::npos);
  EXPECT_NE(hist.find("neutral,6,1\n"), std::string::npos);
}

}  // namespace
}  // namespace exleak
