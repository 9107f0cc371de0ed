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
#ifndef EXLEAK_STATS_H_
#define EXLEAK_STATS_H_

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "exleak/core.h"
#include "exleak/scoring.h"

namespace exleak {

inline constexpr double kDefaultAlpha = 0.001;
// Largest n_effective for which the null distribution is enumerated exactly.
inline constexpr int kWilcoxonExactMaxN = 20;

enum class WilcoxonMethod { kExact, kNormalApprox };

std::string_view wilcoxon_method_name(WilcoxonMethod m);

struct WilcoxonResult {
  int n_effective = 0;
  double w_plus = 0.0;
  double p_value = 1.0;
  WilcoxonMethod method = WilcoxonMethod::kExact;
};

// One-sided signed-rank test of H1: median(d) > 0.
//
// Exact zeros are discarded. Absolute values are ranked with average ranks
// for ties. p = P(W+ >= w_plus) under H0, computed exactly for
// n_effective <= kWilcoxonExactMaxN (ties included, by counting sign
// assignments over the tied rank multiset), otherwise by the normal
// approximation with tie-corrected variance and a 0.5 continuity correction.
//
// Throws DegenerateError when nothing is left after zero removal and
// ArgumentError for an empty or non-finite input.
WilcoxonResult wilcoxon_one_sided(std::span<const double> d);

// Strict: p == alpha is not significant.
bool significance_gate(const WilcoxonResult& result,
                       double alpha = kDefaultAlpha);

struct LengthStats {
  ExpressionLabel label = ExpressionLabel::kNeutral;
  std::size_t n = 0;
  double mean = 0.0;
  // Sample standard deviation (n - 1 denominator); 0 when n < 2.
  double stddev = 0.0;
  std::map<long long, std::size_t> histogram;
};

using LengthSummary = std::array<LengthStats, 3>;

// Token lengths of the injected sentences, grouped by label. Throws
// InsufficientDataError for an empty sample list.
LengthSummary length_summary(std::span<const PromptSample> samples,
                             std::string_view tokenizer_id, Scorer* scorer);
LengthSummary length_summary(const Dataset& dataset,
                             std::string_view tokenizer_id, Scorer* scorer);

// label,mean,stddev,n
std::string length_summary_csv(const LengthSummary& summary);
// label,tokens,count
std::string length_histogram_csv(const LengthSummary& summary);

}  // namespace exleak

#endif  // EXLEAK_STATS_H_
