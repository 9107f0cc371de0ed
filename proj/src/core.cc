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
#include "exleak/core.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "exleak/errors.h"

namespace exleak {

std::string_view label_name(ExpressionLabel l) {
  switch (l) {
    case ExpressionLabel::kNegative:
      return "negative";
    case ExpressionLabel::kNeutral:
      return "neutral";
    case ExpressionLabel::kPositive:
      return "positive";
  }
  return "neutral";
}

ExpressionLabel parse_label(std::string_view name) {
  for (ExpressionLabel l : kAllLabels) {
    if (label_name(l) == name) return l;
  }
  throw SchemaError("unknown label '" + std::string(name) + "'");
}

SentimentScore::SentimentScore(const std::array<double, 3>& probs)
    : probs_(probs) {
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw ArgumentError("sentiment component out of [0,1]: " +
                          std::to_string(p));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw ArgumentError("sentiment components sum to " + std::to_string(sum));
  }
}

SentimentScore SentimentScore::uniform() {
  return SentimentScore({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
}

ExpressionLabel SentimentScore::argmax() const {
  const double neg = probs_[0];
  const double neu = probs_[1];
  const double pos = probs_[2];
  if (neg > neu && neg > pos) return ExpressionLabel::kNegative;
  if (pos > neu && pos > neg) return ExpressionLabel::kPositive;
  return ExpressionLabel::kNeutral;
}

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ArgumentError("embedding has dimension 0");
  for (double v : values_) {
    if (!std::isfinite(v)) throw ArgumentError("embedding is not finite");
  }
  if (!(norm() > 0.0)) throw ArgumentError("embedding has zero norm");
}

double Embedding::norm() const {
  double ss = 0.0;
  for (double v : values_) ss += v * v;
  return std::sqrt(ss);
}

PromptSample PromptSample::create(std::string id, std::string control_prompt,
                                  std::vector<Injection> injections,
                                  Provenance provenance) {
  if (id.empty()) throw IntegrityError("sample id is empty");
  if (control_prompt.empty()) {
    throw IntegrityError("sample '" + id + "': control_prompt is empty");
  }
  if (injections.size() != 3) {
    throw IntegrityError("sample '" + id + "': expected 3 tests, got " +
                         std::to_string(injections.size()));
  }
  PromptSample s;
  std::array<bool, 3> seen{};
  for (Injection& inj : injections) {
    const std::size_t i = index_of(inj.label);
    if (seen[i]) {
      throw IntegrityError("sample '" + id + "': label '" +
                           std::string(label_name(inj.label)) +
                           "' appears more than once");
    }
    if (inj.sentence.empty()) {
      throw IntegrityError("sample '" + id + "': empty injected_sentence");
    }
    seen[i] = true;
    s.tests_[i].full_prompt = inj.sentence + " " + control_prompt;
    s.tests_[i].injected_sentence = std::move(inj.sentence);
    s.tests_[i].label = inj.label;
  }
  s.id_ = std::move(id);
  s.control_prompt_ = std::move(control_prompt);
  s.provenance_ = std::move(provenance);
  return s;
}

std::string_view dataset_kind_name(DatasetKind k) {
  return k == DatasetKind::kHexl ? "hexl" : "aexl";
}

DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "hexl") return DatasetKind::kHexl;
  if (name == "aexl") return DatasetKind::kAexl;
  throw SchemaError("unknown dataset kind '" + std::string(name) + "'");
}

Dataset Dataset::create(std::string name, DatasetKind kind,
                        std::vector<PromptSample> samples) {
  if (samples.empty()) {
    throw IntegrityError("dataset '" + name + "' has no samples");
  }
  std::sort(samples.begin(), samples.end(),
            [](const PromptSample& a, const PromptSample& b) {
              return a.id() < b.id();
            });
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].id() == samples[i - 1].id()) {
      throw IntegrityError("duplicate sample id '" + samples[i].id() + "'");
    }
  }
  Dataset d;
  d.name_ = std::move(name);
  d.kind_ = kind;
  d.samples_ = std::move(samples);
  return d;
}

const PromptSample* Dataset::find(std::string_view id) const {
  auto it = std::lower_bound(
      samples_.begin(), samples_.end(), id,
      [](const PromptSample& s, std::string_view key) { return s.id() < key; });
  if (it == samples_.end() || it->id() != id) return nullptr;
  return &*it;
}

std::string_view instruction_mode_name(InstructionMode m) {
  switch (m) {
    case InstructionMode::kCompleteSentence:
      return "complete_sentence";
    case InstructionMode::kCompleteSentenceWithDisregard:
      return "complete_sentence_with_disregard";
    case InstructionMode::kBare:
      return "bare";
  }
  return "bare";
}

InstructionMode parse_instruction_mode(std::string_view name) {
  if (name == "complete_sentence" || name == "complete") {
    return InstructionMode::kCompleteSentence;
  }
  if (name == "complete_sentence_with_disregard" || name == "disregard") {
    return InstructionMode::kCompleteSentenceWithDisregard;
  }
  if (name == "bare") return InstructionMode::kBare;
  throw ConfigError("unknown instruction mode '" + std::string(name) + "'");
}

void GenerationConfig::validate() const {
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw ConfigError("top_p must be in (0, 1], got " + std::to_string(top_p));
  }
  if (top_k < 0) {
    throw ConfigError("top_k must be >= 0, got " + std::to_string(top_k));
  }
  if (!(repetition_penalty >= 1.0)) {
    throw ConfigError("repetition_penalty must be >= 1, got " +
                      std::to_string(repetition_penalty));
  }
  if (max_new_tokens < 1) {
    throw ConfigError("max_new_tokens must be >= 1, got " +
                      std::to_string(max_new_tokens));
  }
  if (samples_per_prompt < 1) {
    throw ConfigError("samples_per_prompt must be >= 1, got " +
                      std::to_string(samples_per_prompt));
  }
}

std::string_view prompt_kind_name(PromptKind k) {
  return k == PromptKind::kControl ? "control" : "test";
}

PromptKind parse_prompt_kind(std::string_view name) {
  if (name == "control") return PromptKind::kControl;
  if (name == "test") return PromptKind::kTest;
  throw SchemaError("unknown prompt_kind '" + std::string(name) + "'");
}

void GenerationRecord::validate() const {
  const bool is_test = prompt_kind == PromptKind::kTest;
  if (is_test != label.has_value()) {
    throw IntegrityError("record for sample '" + sample_id +
                         "': label must be present iff prompt_kind is test");
  }
  if (sample_index < 0) {
    throw IntegrityError("record for sample '" + sample_id +
                         "': negative sample_index");
  }
}

bool record_order(const GenerationRecord& a, const GenerationRecord& b) {
  auto key = [](const GenerationRecord& r) {
    const int label = r.label ? static_cast<int>(index_of(*r.label)) : -1;
    return std::make_tuple(std::string_view(r.sample_id),
                           static_cast<int>(r.prompt_kind), label,
                           r.sample_index);
  };
  return key(a) < key(b);
}

bool RunManifest::same_run(const RunManifest& o) const {
  return dataset_name == o.dataset_name &&
         dataset_sha256 == o.dataset_sha256 && generation == o.generation &&
         backend == o.backend && scorer == o.scorer &&
         harness_version == o.harness_version &&
         splitter_version == o.splitter_version &&
         instruction_prefix == o.instruction_prefix &&
         disregard_instruction == o.disregard_instruction;
}

}  // namespace exleak
