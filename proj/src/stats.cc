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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "exleak/errors.h"
#include "exleak/serialize.h"

namespace exleak {

std::string_view wilcoxon_method_name(WilcoxonMethod m) {
  return m == WilcoxonMethod::kExact ? "exact" : "normal_approx";
}

WilcoxonResult wilcoxon_one_sided(std::span<const double> d) {
  if (d.empty()) throw ArgumentError("wilcoxon: empty difference vector");

  struct Item {
    double abs;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(d.size());
  for (double x : d) {
    if (!std::isfinite(x)) throw ArgumentError("wilcoxon: non-finite difference");
    if (x != 0.0) items.push_back({std::abs(x), x > 0.0});
  }
  if (items.empty()) {
    throw DegenerateError("wilcoxon: all differences are zero");
  }
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.abs < b.abs; });

  const std::size_t n = items.size();
  // Ranks are kept doubled so tied (average) ranks stay integral.
  std::vector<long long> rank2(n);
  long long tie_term = 0;  // sum of t^3 - t over tie groups
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && items[j + 1].abs == items[i].abs) ++j;
    const long long r2 = static_cast<long long>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) rank2[k] = r2;
    const long long t = static_cast<long long>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  long long w2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (items[i].positive) w2 += rank2[i];
  }

  WilcoxonResult res;
  res.n_effective = static_cast<int>(n);
  res.w_plus = static_cast<double>(w2) / 2.0;

  if (res.n_effective <= kWilcoxonExactMaxN) {
    const long long total2 = std::accumulate(rank2.begin(), rank2.end(), 0LL);
    // counts[s]: number of sign assignments whose doubled W+ equals s.
    std::vector<double> counts(static_cast<std::size_t>(total2) + 1, 0.0);
    counts[0] = 1.0;
    long long reach = 0;
    for (long long r : rank2) {
      for (long long s = reach; s >= 0; --s) {
        if (counts[s] != 0.0) counts[s + r] += counts[s];
      }
      reach += r;
    }
    double tail = 0.0;
    for (long long s = w2; s <= total2; ++s) tail += counts[s];
    res.p_value = std::ldexp(tail, -res.n_effective);
    res.method = WilcoxonMethod::kExact;
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 -
                       static_cast<double>(tie_term) / 48.0;
    if (!(var > 0.0)) {
      res.p_value = res.w_plus > mean ? 0.0 : 1.0;
    } else {
      const double z = (res.w_plus - mean - 0.5) / std::sqrt(var);
      res.p_value = 0.5 * std::erfc(z / std::sqrt(2.0));
    }
    res.method = WilcoxonMethod::kNormalApprox;
  }
  res.p_value = std::clamp(res.p_value, 0.0, 1.0);
  return res;
}

bool significance_gate(const WilcoxonResult& result, double alpha) {
  return result.p_value < alpha;
}

LengthSummary length_summary(std::span<const PromptSample> samples,
                             std::string_view tokenizer_id, Scorer* scorer) {
  if (samples.empty()) {
    throw InsufficientDataError("length summary: no samples");
  }
  LengthSummary out;
  for (ExpressionLabel l : kAllLabels) {
    LengthStats& st = out[index_of(l)];
    st.label = l;
    std::vector<std::string> texts;
    texts.reserve(samples.size());
    for (const PromptSample& s : samples) {
      texts.push_back(s.test(l).injected_sentence);
    }
    const std::vector<long long> counts =
        token_count(texts, scorer, tokenizer_id);
    st.n = counts.size();
    double sum = 0.0;
    for (long long c : counts) {
      sum += static_cast<double>(c);
      ++st.histogram[c];
    }
    st.mean = sum / static_cast<double>(st.n);
    if (st.n > 1) {
      double ss = 0.0;
      for (long long c : counts) {
        const double dev = static_cast<double>(c) - st.mean;
        ss += dev * dev;
      }
      st.stddev = std::sqrt(ss / static_cast<double>(st.n - 1));
    }
  }
  return out;
}

LengthSummary length_summary(const Dataset& dataset,
                             std::string_view tokenizer_id, Scorer* scorer) {
  return length_summary(std::span<const PromptSample>(dataset.samples()),
                        tokenizer_id, scorer);
}

std::string length_summary_csv(const LengthSummary& summary) {
  std::string out = "label,mean,stddev,n\n";
  for (const LengthStats& st : summary) {
    out += std::string(label_name(st.label)) + "," + format_double(st.mean) +
           "," + format_double(st.stddev) + "," + std::to_string(st.n) + "\n";
  }
  return out;
}

std::string length_histogram_csv(const LengthSummary& summary) {
  std::string out = "label,tokens,count\n";
  for (const LengthStats& st : summary) {
    for (const auto& [tokens, count] : st.histogram) {
      out += std::string(label_name(st.label)) + "," + std::to_string(tokens) +
             "," + std::to_string(count) + "\n";
    }
  }
  return out;
}

}  // namespace exleak
