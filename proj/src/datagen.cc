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
#include "exleak/datagen.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <future>
#include <numeric>
#include <unordered_set>

#include "exleak/errors.h"
#include "exleak/random.h"
#include "exleak/serialize.h"

namespace exleak {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

bool has_control_char(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char ch) {
    const auto c = static_cast<unsigned char>(ch);
    return c < 0x20 || c == 0x7f;
  });
}

std::string zero_pad(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

std::size_t digits(std::size_t v) {
  std::size_t d = 1;
  while (v >= 10) {
    v /= 10;
    ++d;
  }
  return d;
}

}  // namespace

void DatagenConfig::validate() const {
  if (m <= 0) throw ConfigError("m must be > 0");
  if (n <= 0 || n > m) throw ConfigError("n must satisfy 0 < n <= m");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!(neutral_split_ratio > 0.0 && neutral_split_ratio < 1.0)) {
    throw ConfigError("neutral_split_ratio must be in (0, 1)");
  }
  if (truncate_words < 2) throw ConfigError("truncate_words must be >= 2");
  if (min_sentence_chars < 0 || max_sentence_chars < min_sentence_chars) {
    throw ConfigError("sentence length bounds are inconsistent");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
}

std::vector<std::string> read_corpus(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) lines.emplace_back(line);
    pos = end + 1;
  }
  const bool jsonl = path.extension() == ".jsonl" ||
                     (!lines.empty() && trim(lines.front()).starts_with("{"));
  if (!jsonl) {
    for (std::string& l : lines) l = std::string(trim(l));
    return lines;
  }
  std::vector<std::string> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    Json j;
    try {
      j = Json::parse(lines[i]);
    } catch (const Json::parse_error&) {
      throw SchemaError(path.string() + ": line " + std::to_string(i + 1) +
                        " is not valid JSON");
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
      throw SchemaError(path.string() + ": line " + std::to_string(i + 1) +
                        ": text: missing or not a string");
    }
    out.emplace_back(trim(j["text"].get<std::string>()));
  }
  return out;
}

ScoredCorpus score_corpus(std::span<const std::string> corpus, Scorer& scorer,
                          const DatagenConfig& cfg) {
  if (corpus.empty()) throw ArgumentError("score_corpus: empty corpus");
  ScoredCorpus out;
  std::vector<std::string> kept;
  std::unordered_set<std::string> seen;
  for (const std::string& s : corpus) {
    const std::size_t len = utf8_length(s);
    if (has_control_char(s)) {
      ++out.dropped_control_chars;
    } else if (len < static_cast<std::size_t>(cfg.min_sentence_chars) ||
               len > static_cast<std::size_t>(cfg.max_sentence_chars)) {
      ++out.dropped_length;
    } else if (!seen.insert(s).second) {
      ++out.dropped_duplicates;
    } else {
      kept.push_back(s);
    }
  }
  if (kept.empty()) {
    throw InsufficientDataError("score_corpus: every sentence was filtered (" +
                                std::to_string(out.dropped()) + " dropped)");
  }

  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t batches = (kept.size() + batch - 1) / batch;
  std::vector<std::vector<SentimentScore>> results(batches);
  std::deque<std::pair<std::size_t, std::future<std::vector<SentimentScore>>>>
      in_flight;
  auto drain_one = [&] {
    auto& [idx, fut] = in_flight.front();
    results[idx] = fut.get();
    in_flight.pop_front();
  };
  const std::span<const std::string> all(kept);
  for (std::size_t b = 0; b < batches; ++b) {
    if (in_flight.size() >= static_cast<std::size_t>(cfg.max_in_flight)) {
      drain_one();
    }
    auto part = all.subspan(b * batch, std::min(batch, kept.size() - b * batch));
    in_flight.emplace_back(b, std::async(std::launch::async, [part, &scorer] {
                             return sentiment(part, scorer);
                           }));
  }
  while (!in_flight.empty()) drain_one();

  out.sentences.reserve(kept.size());
  std::size_t i = 0;
  for (const auto& scores : results) {
    for (const SentimentScore& sc : scores) {
      out.sentences.push_back({kept[i++], sc, sc.argmax()});
    }
  }
  return out;
}

Pool select_pool(std::span<const ScoredSentence> scored, ExpressionLabel label,
                 int m) {
  if (m <= 0) throw ArgumentError("select_pool: m must be > 0");
  if (scored.empty()) throw ArgumentError("select_pool: empty input");
  std::vector<ScoredSentence> sorted(scored.begin(), scored.end());
  std::sort(sorted.begin(), sorted.end(),
            [label](const ScoredSentence& a, const ScoredSentence& b) {
              if (a.score[label] != b.score[label]) {
                return a.score[label] > b.score[label];
              }
              return a.text < b.text;
            });
  Pool pool;
  const auto want = static_cast<std::size_t>(m);
  pool.short_pool = sorted.size() < want;
  if (sorted.size() > want) {
    sorted.erase(sorted.begin() + static_cast<std::ptrdiff_t>(want),
                 sorted.end());
  }
  pool.items = std::move(sorted);
  return pool;
}

std::vector<ScoredSentence> weighted_sample(
    std::span<const ScoredSentence> pool, ExpressionLabel label, int n,
    std::uint64_t seed) {
  if (n < 0) throw ArgumentError("weighted_sample: n must be >= 0");
  if (static_cast<std::size_t>(n) > pool.size()) {
    throw ArgumentError("weighted_sample: n=" + std::to_string(n) +
                        " exceeds pool size " + std::to_string(pool.size()));
  }
  std::vector<const ScoredSentence*> remaining;
  remaining.reserve(pool.size());
  for (const ScoredSentence& s : pool) remaining.push_back(&s);

  Rng rng(seed);
  std::vector<ScoredSentence> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int draw = 0; draw < n; ++draw) {
    double total = 0.0;
    for (const ScoredSentence* s : remaining) total += s->score[label];
    if (!(total > 0.0)) {
      throw DegenerateError("weighted_sample: remaining weights for label '" +
                            std::string(label_name(label)) + "' sum to zero");
    }
    const double target = rng.uniform01() * total;
    double cum = 0.0;
    std::size_t pick = remaining.size();
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      const double w = remaining[i]->score[label];
      if (w <= 0.0) continue;
      cum += w;
      pick = i;
      if (target < cum) break;
    }
    out.push_back(*remaining[pick]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

NeutralPartition partition_neutral(std::span<const ScoredSentence> neutral,
                                   double ratio, std::uint64_t seed) {
  if (neutral.size() < 2) {
    throw InsufficientDataError(
        "partition_neutral: need at least 2 neutral sentences, got " +
        std::to_string(neutral.size()));
  }
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ArgumentError("partition_neutral: ratio must be in (0, 1)");
  }
  std::vector<ScoredSentence> shuffled(neutral.begin(), neutral.end());
  Rng rng(seed);
  rng.shuffle(std::span<ScoredSentence>(shuffled));
  const long long total = static_cast<long long>(shuffled.size());
  const long long controls =
      std::clamp(std::llround(ratio * static_cast<double>(total)), 1LL,
                 total - 1);
  NeutralPartition p;
  const auto split = shuffled.begin() + controls;
  p.control_source.assign(shuffled.begin(), split);
  p.test_neutral.assign(split, shuffled.end());
  return p;
}

std::optional<std::string> truncate_control(std::string_view sentence,
                                            int truncate_words) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() && is_space(sentence[i])) ++i;
    const std::size_t start = i;
    while (i < sentence.size() && !is_space(sentence[i])) ++i;
    if (i > start) words.push_back(sentence.substr(start, i - start));
  }
  if (truncate_words < 1 ||
      words.size() < static_cast<std::size_t>(truncate_words)) {
    return std::nullopt;
  }
  std::string stem;
  for (int w = 0; w < truncate_words; ++w) {
    if (w > 0) stem += ' ';
    stem += words[static_cast<std::size_t>(w)];
  }
  static constexpr std::string_view kStrip = ".!?,;:";
  while (!stem.empty() &&
         (kStrip.find(stem.back()) != std::string_view::npos ||
          is_space(stem.back()))) {
    stem.pop_back();
  }
  const bool has_word = std::any_of(stem.begin(), stem.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c));
  });
  if (!has_word) return std::nullopt;
  return stem;
}

namespace {

Dataset assemble(std::span<const std::string> positive,
                 std::span<const std::string> neutral,
                 std::span<const std::string> negative,
                 std::span<const std::string> controls,
                 std::span<const std::string> control_sources, int k,
                 std::uint64_t seed, std::string name) {
  if (k < 1) throw ArgumentError("assemble_dataset: k must be >= 1");
  const std::array<std::span<const std::string>, 3> pools = {negative, neutral,
                                                             positive};
  for (ExpressionLabel l : kAllLabels) {
    if (pools[index_of(l)].empty()) {
      throw InsufficientDataError("assemble_dataset: empty pool for label '" +
                                  std::string(label_name(l)) + "'");
    }
  }
  if (controls.empty()) {
    throw InsufficientDataError("assemble_dataset: no control prompts");
  }

  // perms[c][l]: this control's visiting order over pool l.
  std::vector<std::array<std::vector<std::size_t>, 3>> perms(controls.size());
  for (std::size_t c = 0; c < controls.size(); ++c) {
    for (ExpressionLabel l : kAllLabels) {
      auto& perm = perms[c][index_of(l)];
      perm.resize(pools[index_of(l)].size());
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      Rng rng(derive_seed(seed, 3 * c + index_of(l)));
      rng.shuffle(std::span<std::size_t>(perm));
    }
  }

  const std::size_t round_width =
      std::max<std::size_t>(2, digits(static_cast<std::size_t>(k - 1)));
  const std::size_t control_width =
      std::max<std::size_t>(4, digits(controls.size() - 1));
  std::vector<PromptSample> samples;
  samples.reserve(static_cast<std::size_t>(k) * controls.size());
  for (int r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < controls.size(); ++c) {
      std::vector<Injection> injections;
      for (ExpressionLabel l : kAllLabels) {
        const auto& perm = perms[c][index_of(l)];
        const std::size_t pick = perm[static_cast<std::size_t>(r) % perm.size()];
        injections.push_back({pools[index_of(l)][pick], l});
      }
      Provenance prov{ProvenanceKind::kGenerated, std::nullopt};
      if (c < control_sources.size()) prov.source = control_sources[c];
      samples.push_back(PromptSample::create(
          name + "-r" + zero_pad(static_cast<std::size_t>(r), round_width) +
              "-c" + zero_pad(c, control_width),
          controls[c], std::move(injections), std::move(prov)));
    }
  }
  return Dataset::create(std::move(name), DatasetKind::kAexl,
                         std::move(samples));
}

std::vector<std::string> texts_of(std::span<const ScoredSentence> s) {
  std::vector<std::string> out;
  out.reserve(s.size());
  for (const ScoredSentence& x : s) out.push_back(x.text);
  return out;
}

}  // namespace

Dataset assemble_dataset(std::span<const std::string> positive,
                         std::span<const std::string> neutral,
                         std::span<const std::string> negative,
                         std::span<const std::string> controls, int k,
                         std::uint64_t seed, std::string name) {
  return assemble(positive, neutral, negative, controls, {}, k, seed,
                  std::move(name));
}

Dataset generate_dataset(std::span<const std::string> corpus, Scorer& scorer,
                         const DatagenConfig& cfg, std::string name,
                         DatagenReport* report) {
  cfg.validate();
  DatagenReport rep;
  rep.corpus_size = corpus.size();
  const ScoredCorpus scored = score_corpus(corpus, scorer, cfg);
  rep.retained = scored.sentences.size();
  rep.dropped = scored.dropped();

  std::array<std::vector<ScoredSentence>, 3> sampled;
  for (ExpressionLabel l : kAllLabels) {
    const std::size_t i = index_of(l);
    Pool pool = select_pool(scored.sentences, l, cfg.m);
    rep.pool_sizes[i] = pool.items.size();
    rep.short_pool[i] = pool.short_pool;
    const int draws =
        std::min(cfg.n, static_cast<int>(pool.items.size()));
    sampled[i] = weighted_sample(pool.items, l, draws, derive_seed(cfg.seed, 1 + i));
  }

  const NeutralPartition split =
      partition_neutral(sampled[index_of(ExpressionLabel::kNeutral)],
                        cfg.neutral_split_ratio, derive_seed(cfg.seed, 10));
  std::vector<std::string> controls;
  std::vector<std::string> sources;
  std::unordered_set<std::string> seen;
  for (const ScoredSentence& s : split.control_source) {
    std::optional<std::string> stem = truncate_control(s.text, cfg.truncate_words);
    if (!stem || !seen.insert(*stem).second) {
      ++rep.controls_skipped;
      continue;
    }
    controls.push_back(std::move(*stem));
    sources.push_back(s.text);
  }
  rep.controls = controls.size();
  rep.test_neutral = split.test_neutral.size();

  const std::vector<std::string> pos =
      texts_of(sampled[index_of(ExpressionLabel::kPositive)]);
  const std::vector<std::string> neg =
      texts_of(sampled[index_of(ExpressionLabel::kNegative)]);
  const std::vector<std::string> neu = texts_of(split.test_neutral);
  Dataset d = assemble(pos, neu, neg, controls, sources, cfg.k,
                       derive_seed(cfg.seed, 20), std::move(name));
  if (report) *report = rep;
  return d;
}

}  // namespace exleak
