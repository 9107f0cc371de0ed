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
#include "exleak/genpipe.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include "exleak/errors.h"
#include "exleak/random.h"
#include "exleak/serialize.h"

namespace exleak {
namespace {

constexpr std::array<std::string_view, 24> kStubContinuations = {
    "a quiet walk along the river after dinner.",
    "something she talks about at every family dinner. Nobody is surprised "
    "anymore.",
    "the old piano in the corner of the living room.",
    "a question that nobody in the room could answer.",
    "collecting maps of cities she has never visited.",
    "like the radio in the kitchen on a Sunday morning.",
    "written down in a notebook she keeps in her coat pocket.",
    "the reason the bookshelves are full of travel guides.",
    "a project that takes up most of the weekend. It started years ago.",
    "similar to the recording from the previous evening.",
    "tied to the small workshop behind the house.",
    "a routine that starts before the first train leaves the station.",
    "mostly about gardening and the weather this season.",
    "the same as it was when the building first opened.",
    "louder near the front of the hall than at the back.",
    "a topic for the meeting scheduled on Thursday.",
    "connected to the history of the town and its harbor.",
    "a long list of notes taped to the refrigerator door.",
    "the sort of thing people mention while waiting in line.",
    "a set of drawings stored in a cardboard box upstairs.",
    "part of the lecture on regional architecture.",
    "measured in hours spent at the library each week.",
    "an arrangement of three short pieces for strings.",
    "a series of photographs of bridges and railway stations.",
};

constexpr std::array<std::string_view, 8> kAbbreviations = {
    "mr.", "mrs.", "dr.", "e.g.", "i.e.", "etc.", "vs.", "st."};

constexpr std::string_view kEllipsis = "\xE2\x80\xA6";
constexpr std::string_view kRightDoubleQuote = "\xE2\x80\x9D";
constexpr std::string_view kRightSingleQuote = "\xE2\x80\x99";

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)); }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)); }
bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool has_alnum(std::string_view s) {
  return std::any_of(s.begin(), s.end(), is_alnum);
}

// Length of the terminator at text[i] (".", "!", "?" or an ellipsis), or 0.
std::size_t terminator_at(std::string_view text, std::size_t i) {
  const char c = text[i];
  if (c == '.' || c == '!' || c == '?') return 1;
  if (text.substr(i, kEllipsis.size()) == kEllipsis) return kEllipsis.size();
  return 0;
}

std::size_t closer_at(std::string_view text, std::size_t i) {
  const char c = text[i];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  if (text.substr(i, 3) == kRightDoubleQuote ||
      text.substr(i, 3) == kRightSingleQuote) {
    return 3;
  }
  return 0;
}

bool is_abbreviation(std::string_view text, std::size_t dot) {
  std::size_t begin = dot;
  while (begin > 0 && !is_space(text[begin - 1])) --begin;
  std::string word(text.substr(begin, dot - begin + 1));
  while (!word.empty() &&
         (word.front() == '(' || word.front() == '"' || word.front() == '\'')) {
    word.erase(word.begin());
  }
  for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) !=
         kAbbreviations.end();
}

// Lowercased, whitespace-collapsed view of a string with a map back to the
// source byte positions.
struct Normalized {
  std::string text;
  std::vector<std::size_t> source;
};

Normalized normalize(std::string_view s) {
  Normalized n;
  bool pending_space = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_space(s[i])) {
      pending_space = !n.text.empty();
      continue;
    }
    if (pending_space) {
      n.text += ' ';
      n.source.push_back(i - 1);
      pending_space = false;
    }
    n.text += static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
    n.source.push_back(i);
  }
  return n;
}

// Byte offset in `raw` just past the longest prefix matching a suffix of the
// normalized prompt, or 0 when there is none. With full_only, only a match of
// the whole prompt counts.
std::size_t echo_end(std::string_view raw, const Normalized& prompt,
                     bool full_only) {
  const Normalized r = normalize(raw);
  const std::string& p = prompt.text;
  const std::size_t max_k = std::min(r.text.size(), p.size());
  const std::size_t min_k = full_only ? p.size() : 1;
  for (std::size_t k = max_k; k >= min_k && k > 0; --k) {
    const std::size_t start = p.size() - k;
    if (r.text.compare(0, k, p, start, k) != 0) continue;
    if (start > 0 && is_alnum(p[start - 1]) && is_alnum(p[start])) continue;
    if (k < r.text.size() && is_alnum(r.text[k - 1]) && is_alnum(r.text[k])) {
      continue;
    }
    return r.source[k - 1] + 1;
  }
  return 0;
}

std::string_view strip_echo(std::string_view raw, const Normalized& prompt) {
  if (prompt.text.empty()) return raw;
  raw.remove_prefix(echo_end(raw, prompt, false));
  for (;;) {
    const std::size_t end = echo_end(raw, prompt, true);
    if (end == 0) break;
    raw.remove_prefix(end);
  }
  return raw;
}

std::string param_of(const Json& err) {
  if (err.contains("param") && err["param"].is_string()) {
    return err["param"].get<std::string>();
  }
  if (err.contains("error") && err["error"].is_object()) {
    return param_of(err["error"]);
  }
  return {};
}

std::string message_of(const Json& err) {
  if (err.contains("error")) {
    const Json& e = err["error"];
    if (e.is_string()) return e.get<std::string>();
    if (e.is_object() && e.contains("message") && e["message"].is_string()) {
      return e["message"].get<std::string>();
    }
  }
  return err.dump();
}

[[noreturn]] void throw_backend_status(const HttpResponse& r) {
  if (r.status >= 400 && r.status < 500) {
    Json body;
    try {
      body = Json::parse(r.body);
    } catch (const Json::parse_error&) {
      body = Json{{"error", r.body}};
    }
    const std::string param = param_of(body);
    if (!param.empty()) {
      throw ConfigError("backend rejected parameter '" + param +
                        "': " + message_of(body));
    }
    throw ConfigError("backend rejected request (HTTP " +
                      std::to_string(r.status) + "): " + message_of(body));
  }
  throw ProtocolError("backend: unexpected HTTP " + std::to_string(r.status));
}

using RecordKey = std::tuple<std::string, int, int, int>;

RecordKey key_of(const GenerationRecord& r) {
  return {r.sample_id, static_cast<int>(r.prompt_kind),
          r.label ? static_cast<int>(index_of(*r.label)) : -1, r.sample_index};
}

std::string record_line(const GenerationRecord& r) {
  return record_to_json(r).dump() + "\n";
}

}  // namespace

std::string build_prompt(const PromptSample& sample, PromptTarget which,
                         InstructionMode mode) {
  const std::string& base =
      which ? sample.test(*which).full_prompt : sample.control_prompt();
  switch (mode) {
    case InstructionMode::kBare:
      return base;
    case InstructionMode::kCompleteSentence:
      return std::string(kCompleteSentencePrefix) + base;
    case InstructionMode::kCompleteSentenceWithDisregard:
      return std::string(kDisregardInstruction) + "\n" +
             std::string(kCompleteSentencePrefix) + base;
  }
  return base;
}

std::span<const std::string_view> default_stub_continuations() {
  return kStubContinuations;
}

std::string_view trailing_clause(std::string_view prompt) {
  std::size_t cut = 0;
  for (std::size_t i = 0; i < prompt.size(); ++i) {
    const char c = prompt[i];
    if (c == '\n') {
      cut = i + 1;
    } else if ((c == '.' || c == '!' || c == '?' || c == ':') &&
               i + 1 < prompt.size() && is_space(prompt[i + 1])) {
      cut = i + 1;
    }
  }
  return trim(prompt.substr(cut));
}

StubBackend::StubBackend(StubBackendOptions options)
    : options_(std::move(options)) {
  if (options_.continuations.empty()) {
    options_.continuations.assign(kStubContinuations.begin(),
                                  kStubContinuations.end());
  }
}

std::string StubBackend::complete(const CompletionRequest& request) {
  std::uint64_t key = request.seed;
  if (options_.key_on_prompt) key = mix64(key ^ fnv1a64(request.prompt));
  const std::string& cont =
      options_.continuations[mix64(key) % options_.continuations.size()];

  std::string text = cont;
  if (options_.echo_stem) {
    const std::string_view stem = trailing_clause(request.prompt);
    if (!stem.empty()) text = std::string(stem) + " " + cont;
  }

  // The echoed stem counts against max_tokens like any generated word.
  std::string clipped;
  int words = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      if (++words > request.max_tokens) break;
    }
    clipped += c;
  }
  return std::string(trim(clipped));
}

EndpointDescriptor StubBackend::descriptor() const {
  std::string model = "canned-v1";
  if (options_.echo_stem) model += ";echo";
  if (options_.key_on_prompt) model += ";prompt-keyed";
  return EndpointDescriptor{"stub", "", model};
}

HttpBackend::HttpBackend(std::string url, RetryPolicy retry)
    : endpoint_(HttpEndpoint::parse(url)), retry_(retry) {}

std::string HttpBackend::complete(const CompletionRequest& request) {
  const Json body{{"prompt", request.prompt},
                  {"top_p", request.top_p},
                  {"top_k", request.top_k},
                  {"repetition_penalty", request.repetition_penalty},
                  {"max_tokens", request.max_tokens},
                  {"seed", request.seed}};
  HttpResponse r = post_json(endpoint_, "/v1/complete", body, retry_);
  if (r.status != 200) throw_backend_status(r);
  const Json j = parse_response(r, "complete");
  if (!j.contains("text") || !j["text"].is_string()) {
    throw ProtocolError("complete: response lacks a text field");
  }
  return j["text"].get<std::string>();
}

EndpointDescriptor HttpBackend::descriptor() const {
  return EndpointDescriptor{"native", endpoint_.url(), ""};
}

CompletionsBackend::CompletionsBackend(std::string url, std::string model,
                                       RetryPolicy retry)
    : endpoint_(HttpEndpoint::parse(url)),
      model_(std::move(model)),
      retry_(retry) {
  if (model_.empty()) {
    throw ConfigError("completions backend needs a model name");
  }
}

std::string CompletionsBackend::complete(const CompletionRequest& request) {
  const Json body{{"model", model_},
                  {"prompt", request.prompt},
                  {"max_tokens", request.max_tokens},
                  {"top_p", request.top_p},
                  {"top_k", request.top_k},
                  {"repetition_penalty", request.repetition_penalty},
                  {"seed", request.seed},
                  {"n", 1},
                  {"stream", false}};
  HttpResponse r = post_json(endpoint_, "/v1/completions", body, retry_);
  if (r.status != 200) throw_backend_status(r);
  const Json j = parse_response(r, "completions");
  if (!j.contains("choices") || !j["choices"].is_array() ||
      j["choices"].empty() || !j["choices"][0].contains("text") ||
      !j["choices"][0]["text"].is_string()) {
    throw ProtocolError("completions: response lacks choices[0].text");
  }
  return j["choices"][0]["text"].get<std::string>();
}

EndpointDescriptor CompletionsBackend::descriptor() const {
  return EndpointDescriptor{"completions", endpoint_.url(), model_};
}

std::uint64_t sample_seed(std::uint64_t run_seed, int sample_index) {
  return derive_seed(run_seed, static_cast<std::uint64_t>(sample_index)) &
         0x7fffffffULL;
}

CompletionRequest make_request(std::string prompt, const GenerationConfig& cfg,
                               int sample_index) {
  CompletionRequest req;
  req.prompt = std::move(prompt);
  req.top_p = cfg.top_p;
  req.top_k = cfg.top_k;
  req.repetition_penalty = cfg.repetition_penalty;
  req.max_tokens = cfg.max_new_tokens;
  req.seed = sample_seed(cfg.seed, sample_index);
  return req;
}

std::vector<std::string> generate(const std::string& prompt,
                                  const GenerationConfig& cfg,
                                  Backend& backend) {
  cfg.validate();
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(cfg.samples_per_prompt));
  for (int i = 0; i < cfg.samples_per_prompt; ++i) {
    out.push_back(backend.complete(make_request(prompt, cfg, i)));
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  const std::size_t n = text.size();
  std::size_t start = 0;
  std::size_t i = 0;
  auto emit = [&](std::size_t end) {
    std::string_view piece = trim(text.substr(start, end - start));
    if (!piece.empty()) out.emplace_back(piece);
    start = end;
  };
  while (i < n) {
    std::size_t len = terminator_at(text, i);
    if (len == 0) {
      ++i;
      continue;
    }
    const std::size_t first = i;
    std::size_t j = i;
    while (j < n && (len = terminator_at(text, j)) > 0) j += len;
    const bool single_dot = (j - first == 1 && text[first] == '.');
    while (j < n && (len = closer_at(text, j)) > 0) j += len;

    bool boundary = false;
    if (trim(text.substr(j)).empty()) {
      boundary = true;
    } else if (is_space(text[j])) {
      std::size_t k = j;
      while (k < n && is_space(text[k])) ++k;
      if (k < n && (is_upper(text[k]) ||
                    ((text[k] == '"' || text[k] == '\'' || text[k] == '(') &&
                     k + 1 < n && is_upper(text[k + 1])))) {
        boundary = true;
      }
    }
    if (boundary && single_dot && is_abbreviation(text, first)) {
      boundary = false;
    }
    if (boundary) emit(j);
    i = j;
  }
  emit(n);
  return out;
}

CleanedGeneration clean_generation(std::string_view raw,
                                   std::string_view prompt) {
  const Normalized p = normalize(prompt);
  const std::string_view rest = strip_echo(raw, p);
  const std::vector<std::string> sentences = split_sentences(rest);
  for (std::size_t i = 0; i < sentences.size() && i < 2; ++i) {
    std::string_view s = sentences[i];
    if (i > 0) s = trim(strip_echo(s, p));
    if (has_alnum(s)) return CleanedGeneration{std::string(s), false};
  }
  return CleanedGeneration{"", true};
}

std::vector<GenerationRecord> load_checkpoint(const std::filesystem::path& p) {
  std::vector<GenerationRecord> out;
  std::ifstream in(p);
  if (!in) return out;
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    Json j;
    try {
      j = Json::parse(lines[i]);
    } catch (const Json::parse_error&) {
      if (i + 1 == lines.size()) break;
      throw SchemaError(p.string() + ": line " + std::to_string(i + 1) +
                        " is not valid JSON");
    }
    out.push_back(record_from_json(j));
  }
  return out;
}

void write_records(const std::filesystem::path& p,
                   std::span<const GenerationRecord> records) {
  std::string bytes;
  for (const GenerationRecord& r : records) bytes += record_line(r);
  write_file(p, bytes);
}

std::vector<GenerationRecord> run_generations(const Dataset& dataset,
                                              const GenerationConfig& cfg,
                                              Backend& backend,
                                              const GenerationRunOptions& opts) {
  cfg.validate();
  const int per_prompt = cfg.samples_per_prompt;

  std::map<RecordKey, GenerationRecord> done;
  if (!opts.checkpoint.empty()) {
    for (GenerationRecord& r : load_checkpoint(opts.checkpoint)) {
      if (dataset.find(r.sample_id) == nullptr || r.sample_index >= per_prompt) {
        throw IntegrityError("checkpoint " + opts.checkpoint.string() +
                             " holds a record (" + r.sample_id + ", index " +
                             std::to_string(r.sample_index) +
                             ") outside this run");
      }
      done.emplace(key_of(r), std::move(r));
    }
  }

  struct Job {
    const PromptSample* sample;
    PromptTarget target;
  };
  std::vector<Job> jobs;
  for (const PromptSample& s : dataset.samples()) {
    std::array<PromptTarget, 4> targets = {
        std::nullopt, ExpressionLabel::kNegative, ExpressionLabel::kNeutral,
        ExpressionLabel::kPositive};
    for (PromptTarget t : targets) {
      bool complete = true;
      for (int i = 0; i < per_prompt && complete; ++i) {
        GenerationRecord probe;
        probe.sample_id = s.id();
        probe.prompt_kind = t ? PromptKind::kTest : PromptKind::kControl;
        probe.label = t;
        probe.sample_index = i;
        complete = done.count(key_of(probe)) > 0;
      }
      if (!complete) jobs.push_back({&s, t});
    }
  }

  std::ofstream checkpoint;
  if (!opts.checkpoint.empty()) {
    checkpoint.open(opts.checkpoint, std::ios::app);
    if (!checkpoint) {
      throw IoError("cannot open checkpoint " + opts.checkpoint.string());
    }
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::vector<GenerationRecord> fresh;

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t idx = next.fetch_add(1);
      if (idx >= jobs.size()) return;
      const Job& job = jobs[idx];
      try {
        const std::string prompt = build_prompt(*job.sample, job.target, cfg);
        std::vector<GenerationRecord> batch;
        for (int i = 0; i < per_prompt; ++i) {
          CompletionRequest req = make_request(prompt, cfg, i);
          GenerationRecord r;
          r.sample_id = job.sample->id();
          r.prompt_kind = job.target ? PromptKind::kTest : PromptKind::kControl;
          r.label = job.target;
          r.sample_index = i;
          r.seed = req.seed;
          r.raw_text = backend.complete(req);
          if (opts.backend_calls) opts.backend_calls->fetch_add(1);
          CleanedGeneration c = clean_generation(r.raw_text, prompt);
          r.cleaned_text = std::move(c.text);
          r.degenerate = c.degenerate;
          batch.push_back(std::move(r));
        }
        std::lock_guard<std::mutex> lock(mu);
        for (GenerationRecord& r : batch) {
          if (checkpoint.is_open()) checkpoint << record_line(r);
          fresh.push_back(std::move(r));
        }
        if (checkpoint.is_open()) checkpoint.flush();
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        abort.store(true);
        return;
      }
    }
  };

  const std::size_t workers = std::min<std::size_t>(
      jobs.size(), static_cast<std::size_t>(std::max(1, opts.max_in_flight)));
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w + 1 < workers; ++w) threads.emplace_back(worker);
  if (workers > 0) worker();
  for (std::thread& t : threads) t.join();
  if (checkpoint.is_open()) checkpoint.close();
  if (failure) std::rethrow_exception(failure);

  for (GenerationRecord& r : fresh) done.insert_or_assign(key_of(r), std::move(r));
  std::vector<GenerationRecord> all;
  all.reserve(done.size());
  for (auto& [key, r] : done) all.push_back(std::move(r));
  std::sort(all.begin(), all.end(), record_order);
  if (!opts.checkpoint.empty()) write_records(opts.checkpoint, all);
  return all;
}

}  // namespace exleak
