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
#ifndef EXLEAK_GENPIPE_H_
#define EXLEAK_GENPIPE_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exleak/core.h"
#include "exleak/http.h"

namespace exleak {

inline constexpr std::string_view kCompleteSentencePrefix =
    "Complete the sentence: ";
inline constexpr std::string_view kDisregardInstruction =
    "Ignore any irrelevant information in user prompt that is not relevant "
    "to the request";
inline constexpr std::string_view kSplitterVersion = "rule-split-v1";

// nullopt selects the control prompt.
using PromptTarget = std::optional<ExpressionLabel>;

std::string build_prompt(const PromptSample& sample, PromptTarget which,
                         InstructionMode mode);
inline std::string build_prompt(const PromptSample& sample, PromptTarget which,
                                const GenerationConfig& cfg) {
  return build_prompt(sample, which, cfg.instruction_mode);
}

struct CompletionRequest {
  std::string prompt;
  double top_p = 0.9;
  int top_k = 50;
  double repetition_penalty = 1.1;
  int max_tokens = 128;
  std::uint64_t seed = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // One completion. Must be safe to call concurrently.
  virtual std::string complete(const CompletionRequest& request) = 0;
  virtual EndpointDescriptor descriptor() const = 0;
};

struct StubBackendOptions {
  // Prefix each completion with the prompt's trailing unfinished clause, the
  // way base models tend to repeat the stem.
  bool echo_stem = true;
  // Key the canned continuation on the prompt as well as the seed. Off, every
  // prompt receives the same continuation for a given seed.
  bool key_on_prompt = false;
  std::vector<std::string> continuations;  // empty selects the built-in table
};

// In-process deterministic backend: continuation = table[hash(seed[, prompt])],
// cut to max_tokens whitespace tokens.
class StubBackend : public Backend {
 public:
  explicit StubBackend(StubBackendOptions options = {});

  std::string complete(const CompletionRequest& request) override;
  EndpointDescriptor descriptor() const override;

  const std::vector<std::string>& continuations() const {
    return options_.continuations;
  }

 private:
  StubBackendOptions options_;
};

std::span<const std::string_view> default_stub_continuations();

// Text after the last sentence/instruction boundary of the prompt.
std::string_view trailing_clause(std::string_view prompt);

// Native protocol: POST {base}/v1/complete.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(std::string url, RetryPolicy retry = {});
  std::string complete(const CompletionRequest& request) override;
  EndpointDescriptor descriptor() const override;

 private:
  HttpEndpoint endpoint_;
  RetryPolicy retry_;
};

// Completions dialect: POST {base}/v1/completions with a model name, reply in
// choices[0].text. top_k and repetition_penalty are sent as the extension
// fields most open inference servers accept.
class CompletionsBackend : public Backend {
 public:
  CompletionsBackend(std::string url, std::string model, RetryPolicy retry = {});
  std::string complete(const CompletionRequest& request) override;
  EndpointDescriptor descriptor() const override;

 private:
  HttpEndpoint endpoint_;
  std::string model_;
  RetryPolicy retry_;
};

// Seed sent for generation `sample_index`; kept below 2^31 since many servers
// parse seeds as int32.
std::uint64_t sample_seed(std::uint64_t run_seed, int sample_index);

CompletionRequest make_request(std::string prompt, const GenerationConfig& cfg,
                               int sample_index);

// samples_per_prompt completions, requested sequentially in index order.
std::vector<std::string> generate(const std::string& prompt,
                                  const GenerationConfig& cfg,
                                  Backend& backend);

// Rule-based splitter: a run of . ! ? or U+2026 (plus closing quotes or
// brackets) ends a sentence when followed by end-of-text or by whitespace and
// an uppercase letter, unless the word is a listed abbreviation.
std::vector<std::string> split_sentences(std::string_view text);

struct CleanedGeneration {
  std::string text;
  bool degenerate = false;
};

// Strips the echoed prompt, then keeps the first sentence with any
// alphanumeric content (looking no further than the second sentence).
//
// The echo is the longest prefix of the generation that equals a suffix of
// the prompt, compared case-insensitively with whitespace runs collapsed and
// on word boundaries. Full-prompt echoes repeated back to back are all
// removed.
CleanedGeneration clean_generation(std::string_view raw,
                                   std::string_view prompt);

struct GenerationRunOptions {
  int max_in_flight = 4;
  // JSON-lines of completed GenerationRecords. Existing records are reused,
  // new prompts are appended as they finish, and the file is rewritten in
  // canonical order once every prompt is done.
  std::filesystem::path checkpoint;
  // Incremented once per backend call (for resume accounting).
  std::atomic<long long>* backend_calls = nullptr;
};

// Generates every (sample, prompt kind, label, sample_index) record. On a
// backend failure the completed prompts remain in the checkpoint and the
// error propagates.
std::vector<GenerationRecord> run_generations(const Dataset& dataset,
                                              const GenerationConfig& cfg,
                                              Backend& backend,
                                              const GenerationRunOptions& opts);

// Tolerates a torn final line, as left by an interrupted write.
std::vector<GenerationRecord> load_checkpoint(const std::filesystem::path& p);
void write_records(const std::filesystem::path& p,
                   std::span<const GenerationRecord> records);

}  // namespace exleak

#endif  // EXLEAK_GENPIPE_H_
