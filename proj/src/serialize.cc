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
#include "exleak/serialize.h"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "exleak/errors.h"

namespace exleak {
namespace {

const Json& require(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError((path.empty() ? "" : path + ".") + key + ": missing");
  }
  return *it;
}

std::string field_path(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

std::string require_string(const Json& obj, const char* key,
                           const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_string()) {
    throw SchemaError(field_path(path, key) + ": expected a string");
  }
  return v.get<std::string>();
}

double require_number(const Json& obj, const char* key,
                      const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_number()) {
    throw SchemaError(field_path(path, key) + ": expected a number");
  }
  return v.get<double>();
}

long long require_int(const Json& obj, const char* key,
                      const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_number_integer()) {
    throw SchemaError(field_path(path, key) + ": expected an integer");
  }
  return v.get<long long>();
}

std::uint64_t require_uint(const Json& obj, const char* key,
                           const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_number_unsigned() &&
      !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw SchemaError(field_path(path, key) +
                      ": expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

ExpressionLabel label_at(const Json& obj, const char* key,
                         const std::string& path) {
  const std::string name = require_string(obj, key, path);
  try {
    return parse_label(name);
  } catch (const SchemaError&) {
    throw SchemaError(field_path(path, key) + ": unknown label '" + name +
                      "'");
  }
}

Provenance provenance_from_json(const Json& j, const std::string& path) {
  auto kind_of = [&](const std::string& s) {
    if (s == "curated") return ProvenanceKind::kCurated;
    if (s == "generated") return ProvenanceKind::kGenerated;
    throw SchemaError(path + ": unknown provenance '" + s + "'");
  };
  Provenance p;
  if (j.is_string()) {
    p.kind = kind_of(j.get<std::string>());
    return p;
  }
  p.kind = kind_of(require_string(j, "kind", path));
  if (auto it = j.find("source"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw SchemaError(path + ".source: expected a string");
    }
    p.source = it->get<std::string>();
  }
  return p;
}

Json provenance_to_json(const Provenance& p) {
  Json j;
  j["kind"] = p.kind == ProvenanceKind::kCurated ? "curated" : "generated";
  if (p.source) j["source"] = *p.source;
  return j;
}

Json endpoint_to_json(const EndpointDescriptor& e) {
  return Json{{"kind", e.kind}, {"url", e.url}, {"model", e.model}};
}

EndpointDescriptor endpoint_from_json(const Json& j, const std::string& path) {
  return EndpointDescriptor{require_string(j, "kind", path),
                            require_string(j, "url", path),
                            require_string(j, "model", path)};
}

}  // namespace

Json dataset_to_json(const Dataset& d) {
  Json samples = Json::array();
  for (const PromptSample& s : d.samples()) {
    Json tests = Json::array();
    for (const TestPrompt& t : s.tests()) {
      tests.push_back({{"injected_sentence", t.injected_sentence},
                       {"label", label_name(t.label)}});
    }
    samples.push_back({{"id", s.id()},
                       {"control_prompt", s.control_prompt()},
                       {"tests", std::move(tests)},
                       {"provenance", provenance_to_json(s.provenance())}});
  }
  return Json{{"name", d.name()},
              {"kind", dataset_kind_name(d.kind())},
              {"samples", std::move(samples)}};
}

Dataset dataset_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("top level: expected an object");
  std::string name = require_string(j, "name", "");
  DatasetKind kind;
  try {
    kind = parse_dataset_kind(require_string(j, "kind", ""));
  } catch (const SchemaError& e) {
    throw SchemaError(std::string("kind: ") + e.what());
  }
  const Json& samples_json = require(j, "samples", "");
  if (!samples_json.is_array()) {
    throw SchemaError("samples: expected an array");
  }
  std::vector<PromptSample> samples;
  samples.reserve(samples_json.size());
  for (std::size_t i = 0; i < samples_json.size(); ++i) {
    const std::string path = "samples[" + std::to_string(i) + "]";
    const Json& sj = samples_json[i];
    std::string id = require_string(sj, "id", path);
    std::string control = require_string(sj, "control_prompt", path);
    const Json& tests_json = require(sj, "tests", path);
    if (!tests_json.is_array()) {
      throw SchemaError(path + ".tests: expected an array");
    }
    std::vector<Injection> injections;
    for (std::size_t t = 0; t < tests_json.size(); ++t) {
      const std::string tpath = path + ".tests[" + std::to_string(t) + "]";
      const Json& tj = tests_json[t];
      if (tj.is_object() && tj.contains("full_prompt")) {
        throw SchemaError(tpath +
                          ".full_prompt: derived field must not be stored");
      }
      injections.push_back({require_string(tj, "injected_sentence", tpath),
                            label_at(tj, "label", tpath)});
    }
    Provenance prov;
    if (auto it = sj.find("provenance"); it != sj.end()) {
      prov = provenance_from_json(*it, path + ".provenance");
    }
    samples.push_back(PromptSample::create(std::move(id), std::move(control),
                                           std::move(injections),
                                           std::move(prov)));
  }
  return Dataset::create(std::move(name), kind, std::move(samples));
}

std::string serialize_dataset(const Dataset& d) {
  return dataset_to_json(d).dump(2) + "\n";
}

Dataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_json(read_json_file(path));
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  write_file(path, serialize_dataset(d));
}

std::string dataset_sha256(const Dataset& d) {
  return sha256_hex(serialize_dataset(d));
}

Json record_to_json(const GenerationRecord& r) {
  Json j{{"sample_id", r.sample_id},
         {"prompt_kind", prompt_kind_name(r.prompt_kind)},
         {"sample_index", r.sample_index},
         {"seed", r.seed},
         {"raw_text", r.raw_text},
         {"cleaned_text", r.cleaned_text},
         {"degenerate", r.degenerate}};
  if (r.label) j["label"] = label_name(*r.label);
  if (r.sentiment) j["sentiment"] = r.sentiment->probs();
  if (r.embedding) {
    j["embedding"] = std::vector<double>(r.embedding->values().begin(),
                                         r.embedding->values().end());
  }
  return j;
}

GenerationRecord record_from_json(const Json& j) {
  const std::string path = "record";
  GenerationRecord r;
  r.sample_id = require_string(j, "sample_id", path);
  r.prompt_kind = parse_prompt_kind(require_string(j, "prompt_kind", path));
  if (j.contains("label") && !j["label"].is_null()) {
    r.label = label_at(j, "label", path);
  }
  r.sample_index = static_cast<int>(require_int(j, "sample_index", path));
  r.seed = require_uint(j, "seed", path);
  r.raw_text = require_string(j, "raw_text", path);
  r.cleaned_text = require_string(j, "cleaned_text", path);
  if (auto it = j.find("degenerate"); it != j.end()) r.degenerate = it->get<bool>();
  try {
    if (auto it = j.find("sentiment"); it != j.end()) {
      r.sentiment = SentimentScore(it->get<std::array<double, 3>>());
    }
    if (auto it = j.find("embedding"); it != j.end()) {
      r.embedding = Embedding(it->get<std::vector<double>>());
    }
  } catch (const Json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw SchemaError(path + ": " + e.what());
  }
  r.validate();
  return r;
}

Json generation_config_to_json(const GenerationConfig& c) {
  return Json{{"top_p", c.top_p},
              {"top_k", c.top_k},
              {"repetition_penalty", c.repetition_penalty},
              {"max_new_tokens", c.max_new_tokens},
              {"samples_per_prompt", c.samples_per_prompt},
              {"seed", c.seed},
              {"instruction_mode", instruction_mode_name(c.instruction_mode)}};
}

GenerationConfig generation_config_from_json(const Json& j) {
  const std::string path = "generation";
  GenerationConfig c;
  c.top_p = require_number(j, "top_p", path);
  c.top_k = static_cast<int>(require_int(j, "top_k", path));
  c.repetition_penalty = require_number(j, "repetition_penalty", path);
  c.max_new_tokens = static_cast<int>(require_int(j, "max_new_tokens", path));
  c.samples_per_prompt =
      static_cast<int>(require_int(j, "samples_per_prompt", path));
  c.seed = require_uint(j, "seed", path);
  try {
    c.instruction_mode =
        parse_instruction_mode(require_string(j, "instruction_mode", path));
  } catch (const ConfigError& e) {
    throw SchemaError(path + ".instruction_mode: " + e.what());
  }
  return c;
}

Json manifest_to_json(const RunManifest& m) {
  return Json{{"schema_version", kResultsSchemaVersion},
              {"harness_version", m.harness_version},
              {"dataset", {{"name", m.dataset_name}, {"sha256", m.dataset_sha256}}},
              {"generation", generation_config_to_json(m.generation)},
              {"backend", endpoint_to_json(m.backend)},
              {"scorer", endpoint_to_json(m.scorer)},
              {"splitter_version", m.splitter_version},
              {"instruction_prefix", m.instruction_prefix},
              {"disregard_instruction", m.disregard_instruction},
              {"timestamp", m.timestamp}};
}

RunManifest manifest_from_json(const Json& j) {
  const long long version = require_int(j, "schema_version", "");
  if (version > kResultsSchemaVersion) {
    throw VersionError("manifest schema_version " + std::to_string(version) +
                       " is newer than supported version " +
                       std::to_string(kResultsSchemaVersion));
  }
  RunManifest m;
  m.harness_version = require_string(j, "harness_version", "");
  const Json& ds = require(j, "dataset", "");
  m.dataset_name = require_string(ds, "name", "dataset");
  m.dataset_sha256 = require_string(ds, "sha256", "dataset");
  m.generation = generation_config_from_json(require(j, "generation", ""));
  m.backend = endpoint_from_json(require(j, "backend", ""), "backend");
  m.scorer = endpoint_from_json(require(j, "scorer", ""), "scorer");
  m.splitter_version = require_string(j, "splitter_version", "");
  m.instruction_prefix = require_string(j, "instruction_prefix", "");
  m.disregard_instruction = require_string(j, "disregard_instruction", "");
  m.timestamp = require_string(j, "timestamp", "");
  return m;
}

Json outcome_to_json(const LeakageOutcome& o) {
  return Json{{"sample_id", o.sample_id},
              {"label", label_name(o.label)},
              {"el", o.el},
              {"paired_diff", o.paired_diff},
              {"sem_l", o.sem_l},
              {"sim_test", o.sim_test},
              {"sim_ctl", o.sim_ctl},
              {"per_generation_el", o.per_generation_el}};
}

LeakageOutcome outcome_from_json(const Json& j) {
  const std::string path = "outcome";
  LeakageOutcome o;
  o.sample_id = require_string(j, "sample_id", path);
  o.label = label_at(j, "label", path);
  o.el = static_cast<int>(require_int(j, "el", path));
  o.paired_diff = require_number(j, "paired_diff", path);
  o.sem_l = require_number(j, "sem_l", path);
  o.sim_test = require_number(j, "sim_test", path);
  o.sim_ctl = require_number(j, "sim_ctl", path);
  if (auto it = j.find("per_generation_el"); it != j.end()) {
    o.per_generation_el = it->get<std::vector<int>>();
  }
  return o;
}

std::string outcomes_to_csv(std::span<const LeakageOutcome> outcomes) {
  std::string out = "sample_id,label,el,paired_diff,sem_l,sim_test,sim_ctl\n";
  for (const LeakageOutcome& o : outcomes) {
    std::string id = o.sample_id;
    if (id.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : id) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      id = quoted + "\"";
    }
    out += id;
    out += ',';
    out += label_name(o.label);
    out += ',' + std::to_string(o.el);
    out += ',' + format_double(o.paired_diff);
    out += ',' + format_double(o.sem_l);
    out += ',' + format_double(o.sim_test);
    out += ',' + format_double(o.sim_ctl);
    out += '\n';
  }
  return out;
}

std::string format_double(double v) {
  std::array<char, 64> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md;
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ExitCode::kGeneric, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xf];
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot write " + path.string());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(path.string() + ": not valid JSON: " + e.what());
  }
}

}  // namespace exleak
