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
#ifndef EXLEAK_METRICS_H_
#define EXLEAK_METRICS_H_

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "exleak/core.h"
#include "exleak/scoring.h"

namespace exleak {

// How sentiment over the samples_per_prompt generations of one prompt is
// pooled before the leakage decision, and what the semantic "concept" is.
// Both are written into every results file.
inline constexpr std::string_view kAggregationPolicy =
    "mean of probability vectors over generations";
inline constexpr std::string_view kConceptPolicy =
    "concept text = injected sentence; sim = mean cosine over generations; "
    "empty generations have similarity 0";

// Component-wise mean. Throws ArgumentError for an empty list.
SentimentScore aggregate_generations(std::span<const SentimentScore> scores);

struct ElDecision {
  int el = 0;
  double paired_diff = 0.0;
};

// el = 1 iff p_test[l] > p_ctl[l]; paired_diff = p_test[l] - p_ctl[l].
ElDecision decide_el(const SentimentScore& p_test, const SentimentScore& p_ctl,
                     ExpressionLabel l);

// Mean el over negative and positive outcomes; neutral rows are ignored.
// Throws InsufficientDataError if no charged outcome remains.
double mean_el(std::span<const LeakageOutcome> outcomes);

// Throws ArgumentError on zero vectors or mismatched dimensions.
double cosine(const Embedding& u, const Embedding& v);

// 1 if sim_test > sim_ctl, 0 if smaller, 0.5 on equality.
double decide_sl(double sim_test, double sim_ctl);

struct LabelRates {
  std::size_t n = 0;
  double el_rate = 0.0;
  double l_rate = 0.0;
};

struct LeakageSummary {
  double mu_el = 0.0;  // negative and positive injections only
  double mu_l = 0.0;   // all labels
  std::size_t n_el = 0;
  std::size_t n_l = 0;
  std::array<LabelRates, 3> per_label;
};

LeakageSummary summarize(std::span<const LeakageOutcome> outcomes);

struct Evaluation {
  std::vector<LeakageOutcome> outcomes;  // ordered by (sample_id, label)
  LeakageSummary summary;
};

// Scores the cleaned generations and applies both leakage decisions to
// every (sample, label) pair. Throws IntegrityError listing the missing
// (sample_id, prompt) pairs if records do not cover the dataset with
// samples_per_prompt generations each.
Evaluation evaluate_run(const Dataset& dataset,
                        std::span<const GenerationRecord> records,
                        Scorer& scorer, int samples_per_prompt);

}  // namespace exleak

#endif  // EXLEAK_METRICS_H_
