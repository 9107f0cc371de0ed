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
#include "exleak/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <unordered_map>

#include "exleak/errors.h"

namespace exleak {

SentimentScore aggregate_generations(std::span<const SentimentScore> scores) {
  if (scores.empty()) {
    throw ArgumentError("aggregate_generations: empty score list");
  }
  std::array<double, 3> sum = {0.0, 0.0, 0.0};
  for (const SentimentScore& s : scores) {
    for (std::size_t c = 0; c < 3; ++c) sum[c] += s.probs()[c];
  }
  const double n = static_cast<double>(scores.size());
  for (double& v : sum) v = std::clamp(v / n, 0.0, 1.0);
  return SentimentScore(sum);
}

ElDecision decide_el(const SentimentScore& p_test, const SentimentScore& p_ctl,
                     ExpressionLabel l) {
  const double diff = p_test[l] - p_ctl[l];
  return ElDecision{diff > 0.0 ? 1 : 0, diff};
}

double mean_el(std::span<const LeakageOutcome> outcomes) {
  std::size_t n = 0;
  std::size_t leaks = 0;
  for (const LeakageOutcome& o : outcomes) {
    if (o.label == ExpressionLabel::kNeutral) continue;
    ++n;
    leaks += static_cast<std::size_t>(o.el);
  }
  if (n == 0) {
    throw InsufficientDataError(
        "mean_el: no negative or positive outcomes to average");
  }
  return static_cast<double>(leaks) / static_cast<double>(n);
}

double cosine(const Embedding& u, const Embedding& v) {
  if (u.dim() != v.dim()) {
    throw ArgumentError("cosine: dimension mismatch (" +
                        std::to_string(u.dim()) + " vs " +
                        std::to_string(v.dim()) + ")");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (!(nu > 0.0) || !(nv > 0.0)) throw ArgumentError("cosine: zero vector");
  double dot = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) dot += u.values()[i] * v.values()[i];
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

double decide_sl(double sim_test, double sim_ctl) {
  if (sim_test > sim_ctl) return 1.0;
  if (sim_test < sim_ctl) return 0.0;
  return 0.5;
}

LeakageSummary summarize(std::span<const LeakageOutcome> outcomes) {
  if (outcomes.empty()) throw InsufficientDataError("summarize: no outcomes");
  LeakageSummary s;
  std::array<double, 3> el_sum{};
  std::array<double, 3> l_sum{};
  double l_total = 0.0;
  for (const LeakageOutcome& o : outcomes) {
    const std::size_t i = index_of(o.label);
    ++s.per_label[i].n;
    el_sum[i] += o.el;
    l_sum[i] += o.sem_l;
    l_total += o.sem_l;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    LabelRates& r = s.per_label[i];
    if (r.n == 0) continue;
    r.el_rate = el_sum[i] / static_cast<double>(r.n);
    r.l_rate = l_sum[i] / static_cast<double>(r.n);
  }
  s.n_l = outcomes.size();
  s.mu_l = l_total / static_cast<double>(s.n_l);
  s.n_el = s.per_label[index_of(ExpressionLabel::kNegative)].n +
           s.per_label[index_of(ExpressionLabel::kPositive)].n;
  if (s.n_el > 0) s.mu_el = mean_el(outcomes);
  return s;
}

namespace {

using PromptKey = std::tuple<std::string, int>;  // (sample_id, label or -1)

int label_slot(const std::optional<ExpressionLabel>& l) {
  return l ? static_cast<int>(index_of(*l)) : -1;
}

std::string prompt_name(const std::string& id, int slot) {
  if (slot < 0) return "(" + id + ", control)";
  return "(" + id + ", test:" +
         std::string(label_name(static_cast<ExpressionLabel>(slot))) + ")";
}

// Dense index over the distinct strings of a batch.
class TextTable {
 public:
  std::size_t add(const std::string& text) {
    auto [it, inserted] = index_.emplace(text, texts_.size());
    if (inserted) texts_.push_back(text);
    return it->second;
  }
  const std::vector<std::string>& texts() const { return texts_; }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> texts_;
};

}  // namespace

Evaluation evaluate_run(const Dataset& dataset,
                        std::span<const GenerationRecord> records,
                        Scorer& scorer, int samples_per_prompt) {
  if (samples_per_prompt < 1) {
    throw ArgumentError("evaluate_run: samples_per_prompt must be >= 1");
  }
  const auto per_prompt = static_cast<std::size_t>(samples_per_prompt);

  std::map<PromptKey, std::vector<const GenerationRecord*>> by_prompt;
  for (const GenerationRecord& r : records) {
    r.validate();
    if (dataset.find(r.sample_id) == nullptr) {
      throw IntegrityError("record references unknown sample '" +
                           r.sample_id + "'");
    }
    if (r.sample_index >= samples_per_prompt) {
      throw IntegrityError("record (" + r.sample_id + ", index " +
                           std::to_string(r.sample_index) +
                           ") exceeds samples_per_prompt");
    }
    auto& slots = by_prompt[{r.sample_id, label_slot(r.label)}];
    if (slots.empty()) slots.resize(per_prompt, nullptr);
    slots[static_cast<std::size_t>(r.sample_index)] = &r;
  }

  std::vector<std::string> gaps;
  for (const PromptSample& s : dataset.samples()) {
    for (int slot = -1; slot < 3; ++slot) {
      auto it = by_prompt.find({s.id(), slot});
      if (it == by_prompt.end()) {
        gaps.push_back(prompt_name(s.id(), slot));
        continue;
      }
      std::string missing;
      for (std::size_t i = 0; i < per_prompt; ++i) {
        if (it->second[i] == nullptr) {
          missing += (missing.empty() ? "" : ",") + std::to_string(i);
        }
      }
      if (!missing.empty()) {
        std::string name = prompt_name(s.id(), slot);
        name.insert(name.size() - 1, ", sample_index=" + missing);
        gaps.push_back(std::move(name));
      }
    }
  }
  if (!gaps.empty()) {
    std::string msg = "generation records do not cover the dataset; missing";
    const std::size_t shown = std::min<std::size_t>(gaps.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) msg += " " + gaps[i];
    if (gaps.size() > shown) {
      msg += " ... and " + std::to_string(gaps.size() - shown) + " more";
    }
    throw IntegrityError(msg);
  }

  // Score every distinct text once.
  TextTable generations;
  TextTable embed_texts;
  for (const GenerationRecord& r : records) {
    generations.add(r.cleaned_text);
    if (!r.cleaned_text.empty()) embed_texts.add(r.cleaned_text);
  }
  for (const PromptSample& s : dataset.samples()) {
    for (const TestPrompt& t : s.tests()) embed_texts.add(t.injected_sentence);
  }
  const std::vector<SentimentScore> scores =
      sentiment(generations.texts(), scorer);
  const std::vector<Embedding> vectors = embed(embed_texts.texts(), scorer);

  auto score_of = [&](const GenerationRecord* r) -> const SentimentScore& {
    return scores[generations.add(r->cleaned_text)];
  };
  auto mean_sim = [&](const Embedding& concept_vec,
                      const std::vector<const GenerationRecord*>& gens) {
    double sum = 0.0;
    for (const GenerationRecord* r : gens) {
      if (r->cleaned_text.empty()) continue;
      sum += cosine(concept_vec, vectors[embed_texts.add(r->cleaned_text)]);
    }
    return sum / static_cast<double>(gens.size());
  };

  Evaluation ev;
  for (const PromptSample& s : dataset.samples()) {
    const auto& ctl = by_prompt.at({s.id(), -1});
    std::vector<SentimentScore> ctl_scores;
    for (const GenerationRecord* r : ctl) ctl_scores.push_back(score_of(r));
    const SentimentScore p_ctl = aggregate_generations(ctl_scores);

    for (const TestPrompt& t : s.tests()) {
      const auto& test = by_prompt.at({s.id(), static_cast<int>(index_of(t.label))});
      std::vector<SentimentScore> test_scores;
      for (const GenerationRecord* r : test) test_scores.push_back(score_of(r));
      const SentimentScore p_test = aggregate_generations(test_scores);

      LeakageOutcome o;
      o.sample_id = s.id();
      o.label = t.label;
      const ElDecision d = decide_el(p_test, p_ctl, t.label);
      o.el = d.el;
      o.paired_diff = d.paired_diff;
      for (std::size_t i = 0; i < per_prompt; ++i) {
        o.per_generation_el.push_back(
            decide_el(test_scores[i], ctl_scores[i], t.label).el);
      }
      const Embedding& concept_vec = vectors[embed_texts.add(t.injected_sentence)];
      o.sim_test = mean_sim(concept_vec, test);
      o.sim_ctl = mean_sim(concept_vec, ctl);
      o.sem_l = decide_sl(o.sim_test, o.sim_ctl);
      ev.outcomes.push_back(std::move(o));
    }
  }
  ev.summary = summarize(ev.outcomes);
  return ev;
}

}  // namespace exleak
