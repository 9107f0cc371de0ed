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
#ifndef EXLEAK_CORE_H_
#define EXLEAK_CORE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace exleak {

inline constexpr std::string_view kHarnessVersion = "0.3.0";

// Three-class sentiment space. The integer encoding is part of every file
// format and of the scorer wire protocol (probs are ordered neg, neu, pos).
enum class ExpressionLabel : std::uint8_t {
  kNegative = 0,
  kNeutral = 1,
  kPositive = 2,
};

inline constexpr std::array<ExpressionLabel, 3> kAllLabels = {
    ExpressionLabel::kNegative, ExpressionLabel::kNeutral,
    ExpressionLabel::kPositive};

constexpr std::size_t index_of(ExpressionLabel l) {
  return static_cast<std::size_t>(l);
}

std::string_view label_name(ExpressionLabel l);
// Throws SchemaError for anything but "negative", "neutral", "positive".
ExpressionLabel parse_label(std::string_view name);

// A point on the 3-simplex. Construction validates; an instance always has
// components in [0,1] summing to 1 within kSimplexTolerance.
class SentimentScore {
 public:
  static constexpr double kSimplexTolerance = 1e-6;

  // Throws ArgumentError when probs is off the simplex.
  explicit SentimentScore(const std::array<double, 3>& probs);

  static SentimentScore uniform();

  double operator[](ExpressionLabel l) const { return probs_[index_of(l)]; }
  const std::array<double, 3>& probs() const { return probs_; }

  // Index of the maximal component; any tie for the maximum resolves to
  // neutral.
  ExpressionLabel argmax() const;

  bool operator==(const SentimentScore&) const = default;

 private:
  std::array<double, 3> probs_;
};

// Dense sentence embedding with strictly positive norm.
class Embedding {
 public:
  // Throws ArgumentError on empty, non-finite or zero-norm input.
  explicit Embedding(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double norm() const;

  bool operator==(const Embedding&) const = default;

 private:
  std::vector<double> values_;
};

struct TestPrompt {
  std::string injected_sentence;
  ExpressionLabel label;
  // injected_sentence + " " + control_prompt; derived, never stored on disk.
  std::string full_prompt;

  bool operator==(const TestPrompt&) const = default;
};

enum class ProvenanceKind { kCurated, kGenerated };

struct Provenance {
  ProvenanceKind kind = ProvenanceKind::kCurated;
  std::optional<std::string> source;

  bool operator==(const Provenance&) const = default;
};

struct Injection {
  std::string sentence;
  ExpressionLabel label;
};

// One control stem plus one injected test prompt per label.
class PromptSample {
 public:
  // Validates every invariant and derives full_prompt. Throws
  // IntegrityError on violations (missing/duplicate labels, empty text).
  static PromptSample create(std::string id, std::string control_prompt,
                             std::vector<Injection> injections,
                             Provenance provenance = {});

  const std::string& id() const { return id_; }
  const std::string& control_prompt() const { return control_prompt_; }
  // Ordered by label: negative, neutral, positive.
  const std::array<TestPrompt, 3>& tests() const { return tests_; }
  const TestPrompt& test(ExpressionLabel l) const {
    return tests_[index_of(l)];
  }
  const Provenance& provenance() const { return provenance_; }

  bool operator==(const PromptSample&) const = default;

 private:
  PromptSample() = default;

  std::string id_;
  std::string control_prompt_;
  std::array<TestPrompt, 3> tests_;
  Provenance provenance_;
};

enum class DatasetKind { kHexl, kAexl };

std::string_view dataset_kind_name(DatasetKind k);
DatasetKind parse_dataset_kind(std::string_view name);

class Dataset {
 public:
  // Sorts samples by id. Throws IntegrityError on duplicate ids or an empty
  // sample list.
  static Dataset create(std::string name, DatasetKind kind,
                        std::vector<PromptSample> samples);

  const std::string& name() const { return name_; }
  DatasetKind kind() const { return kind_; }
  const std::vector<PromptSample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  // Control prompts plus test prompts: 4 per sample.
  std::size_t prompt_count() const { return 4 * samples_.size(); }

  const PromptSample* find(std::string_view id) const;

  bool operator==(const Dataset&) const = default;

 private:
  Dataset() = default;

  std::string name_;
  DatasetKind kind_ = DatasetKind::kHexl;
  std::vector<PromptSample> samples_;
};

enum class InstructionMode {
  kCompleteSentence,
  kCompleteSentenceWithDisregard,
  kBare,
};

std::string_view instruction_mode_name(InstructionMode m);
// Accepts both the canonical names and the CLI short forms
// (complete|disregard|bare). Throws ConfigError otherwise.
InstructionMode parse_instruction_mode(std::string_view name);

struct GenerationConfig {
  double top_p = 0.9;
  int top_k = 50;
  double repetition_penalty = 1.1;
  int max_new_tokens = 128;
  int samples_per_prompt = 10;
  std::uint64_t seed = 0;
  InstructionMode instruction_mode = InstructionMode::kCompleteSentence;

  // Throws ConfigError naming the first out-of-range parameter.
  void validate() const;

  bool operator==(const GenerationConfig&) const = default;
};

enum class PromptKind { kControl, kTest };

std::string_view prompt_kind_name(PromptKind k);
PromptKind parse_prompt_kind(std::string_view name);

struct GenerationRecord {
  std::string sample_id;
  PromptKind prompt_kind = PromptKind::kControl;
  std::optional<ExpressionLabel> label;
  int sample_index = 0;
  std::uint64_t seed = 0;
  std::string raw_text;
  std::string cleaned_text;
  bool degenerate = false;
  std::optional<SentimentScore> sentiment;
  std::optional<Embedding> embedding;

  // Throws IntegrityError if label presence disagrees with prompt_kind.
  void validate() const;

  bool operator==(const GenerationRecord&) const = default;
};

// Total order used for persistence: (sample_id, prompt_kind, label,
// sample_index) with control before test.
bool record_order(const GenerationRecord& a, const GenerationRecord& b);

struct LeakageOutcome {
  std::string sample_id;
  ExpressionLabel label = ExpressionLabel::kNeutral;
  int el = 0;
  double paired_diff = 0.0;
  double sem_l = 0.5;
  double sim_test = 0.0;
  double sim_ctl = 0.0;
  // EL of test generation i against control generation i, for inspection.
  std::vector<int> per_generation_el;

  bool operator==(const LeakageOutcome&) const = default;
};

struct EndpointDescriptor {
  std::string kind;  // "stub", "native", "completions", "http"
  std::string url;
  std::string model;

  bool operator==(const EndpointDescriptor&) const = default;
};

struct RunManifest {
  std::string dataset_name;
  std::string dataset_sha256;
  GenerationConfig generation;
  EndpointDescriptor backend;
  EndpointDescriptor scorer;
  std::string harness_version{kHarnessVersion};
  std::string splitter_version;
  std::string instruction_prefix;
  std::string disregard_instruction;
  std::string timestamp;

  // Equality on every field except the timestamp.
  bool same_run(const RunManifest& other) const;
};

}  // namespace exleak

#endif  // EXLEAK_CORE_H_
