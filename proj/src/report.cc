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
#include "exleak/report.h"

#include <algorithm>
#include <cstdio>
#include <ctime>

#include "exleak/errors.h"

namespace exleak {
namespace {

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError(where + (where.empty() ? "" : ".") + key + ": missing");
  }
  return j.at(key);
}

double number(const Json& j, const char* key, const std::string& where) {
  const Json& v = field(j, key, where);
  if (!v.is_number()) {
    throw SchemaError(where + (where.empty() ? "" : ".") + key +
                      ": expected a number");
  }
  return v.get<double>();
}

Json policies() {
  return Json{
      {"aggregation", kAggregationPolicy},
      {"concept", kConceptPolicy},
      {"el_comparison", "el = 1 iff p_test[l] > p_ctl[l] (ties give 0)"},
      {"mu_el_labels", "negative, positive"},
      {"mu_l_labels", "negative, neutral, positive"},
      {"wilcoxon_input", "paired_diff at the injected label over the mu_el rows"},
      {"wilcoxon_zeros", "zero differences discarded; tied magnitudes share the "
                         "average rank"},
      {"wilcoxon_method",
       "exact enumeration up to 20 nonzero differences, normal approximation "
       "with tie-corrected variance and 0.5 continuity correction above"},
  };
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json manifest_without_timestamp(const RunManifest& m) {
  Json j = manifest_to_json(m);
  j.erase("timestamp");
  return j;
}

std::string per_label_csv(const LeakageSummary& s) {
  std::string out = "label,n,el_rate,l_rate\n";
  for (ExpressionLabel l : kAllLabels) {
    const LabelRates& r = s.per_label[index_of(l)];
    out += std::string(label_name(l)) + "," + std::to_string(r.n) + "," +
           format_double(r.el_rate) + "," + format_double(r.l_rate) + "\n";
  }
  return out;
}

// Left-aligned first columns, right-aligned numbers, two spaces apart.
std::string align(const std::vector<std::vector<std::string>>& rows,
                  std::size_t text_columns) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      const std::string pad(width[c] - row[c].size(), ' ');
      line += c < text_columns ? row[c] + pad : pad + row[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string csv_row(const std::vector<std::string>& row) {
  std::string line;
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (c > 0) line += ",";
    line += csv_field(row[c]);
  }
  return line + "\n";
}

// Names the top-level manifest fields that differ, for the resume error.
std::string manifest_diff(const RunManifest& a, const RunManifest& b) {
  const Json ja = manifest_without_timestamp(a);
  const Json jb = manifest_without_timestamp(b);
  std::string keys;
  for (const auto& [key, value] : ja.items()) {
    if (!jb.contains(key) || jb.at(key) != value) {
      keys += (keys.empty() ? "" : ", ") + key;
    }
  }
  return keys;
}

}  // namespace

std::string RunResults::model() const {
  if (!manifest.backend.model.empty()) return manifest.backend.model;
  if (manifest.backend.url.empty()) return manifest.backend.kind;
  return manifest.backend.kind + "@" + manifest.backend.url;
}

Json results_to_json(const RunResults& r) {
  Json per_label = Json::object();
  for (ExpressionLabel l : kAllLabels) {
    const LabelRates& rates = r.summary.per_label[index_of(l)];
    per_label[std::string(label_name(l))] = {
        {"n", rates.n}, {"el_rate", rates.el_rate}, {"l_rate", rates.l_rate}};
  }
  Json summary = {{"mu_el", r.summary.n_el > 0 ? Json(r.summary.mu_el) : Json()},
                  {"mu_l", r.summary.mu_l},
                  {"n_el", r.summary.n_el},
                  {"n_l", r.summary.n_l},
                  {"per_label", per_label}};
  Json wilcoxon;
  if (r.wilcoxon) {
    wilcoxon = {{"n_effective", r.wilcoxon->n_effective},
                {"w_plus", r.wilcoxon->w_plus},
                {"p_value", r.wilcoxon->p_value},
                {"method", wilcoxon_method_name(r.wilcoxon->method)}};
  }
  Json outcomes = Json::array();
  for (const LeakageOutcome& o : r.outcomes) outcomes.push_back(outcome_to_json(o));
  return Json{{"schema_version", kResultsSchemaVersion},
              {"harness_version", r.manifest.harness_version},
              {"model", r.model()},
              {"manifest", manifest_without_timestamp(r.manifest)},
              {"summary", summary},
              {"wilcoxon", wilcoxon},
              {"wilcoxon_note", r.wilcoxon_note},
              {"alpha", r.alpha},
              {"significant", r.significant},
              {"policies", policies()},
              {"outcomes", outcomes}};
}

RunResults results_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("results: expected an object");
  const Json& version = field(j, "schema_version", "");
  if (!version.is_number_integer()) {
    throw SchemaError("schema_version: expected an integer");
  }
  if (version.get<long long>() > kResultsSchemaVersion) {
    throw VersionError("results schema_version " +
                       std::to_string(version.get<long long>()) +
                       " is newer than supported version " +
                       std::to_string(kResultsSchemaVersion));
  }
  RunResults r;
  Json manifest = field(j, "manifest", "");
  if (manifest.is_object() && !manifest.contains("timestamp")) {
    manifest["timestamp"] = "";
  }
  r.manifest = manifest_from_json(manifest);

  const Json& outcomes = field(j, "outcomes", "");
  if (!outcomes.is_array()) throw SchemaError("outcomes: expected an array");
  for (const Json& o : outcomes) r.outcomes.push_back(outcome_from_json(o));

  const Json& summary = field(j, "summary", "");
  const Json& mu_el = field(summary, "mu_el", "summary");
  r.summary.mu_el = mu_el.is_null() ? 0.0 : number(summary, "mu_el", "summary");
  r.summary.mu_l = number(summary, "mu_l", "summary");
  r.summary.n_el = static_cast<std::size_t>(number(summary, "n_el", "summary"));
  r.summary.n_l = static_cast<std::size_t>(number(summary, "n_l", "summary"));
  const Json& per_label = field(summary, "per_label", "summary");
  for (ExpressionLabel l : kAllLabels) {
    const std::string name(label_name(l));
    const Json& rates = field(per_label, name.c_str(), "summary.per_label");
    const std::string where = "summary.per_label." + name;
    LabelRates& out = r.summary.per_label[index_of(l)];
    out.n = static_cast<std::size_t>(number(rates, "n", where));
    out.el_rate = number(rates, "el_rate", where);
    out.l_rate = number(rates, "l_rate", where);
  }

  const Json& w = field(j, "wilcoxon", "");
  if (!w.is_null()) {
    WilcoxonResult res;
    res.n_effective = static_cast<int>(number(w, "n_effective", "wilcoxon"));
    res.w_plus = number(w, "w_plus", "wilcoxon");
    res.p_value = number(w, "p_value", "wilcoxon");
    const Json& method = field(w, "method", "wilcoxon");
    if (!method.is_string()) throw SchemaError("wilcoxon.method: expected a string");
    if (method == "exact") {
      res.method = WilcoxonMethod::kExact;
    } else if (method == "normal_approx") {
      res.method = WilcoxonMethod::kNormalApprox;
    } else {
      throw SchemaError("wilcoxon.method: unknown value '" +
                        method.get<std::string>() + "'");
    }
    r.wilcoxon = res;
  }
  if (j.contains("wilcoxon_note") && j["wilcoxon_note"].is_string()) {
    r.wilcoxon_note = j["wilcoxon_note"].get<std::string>();
  }
  r.alpha = number(j, "alpha", "");
  const Json& significant = field(j, "significant", "");
  if (!significant.is_boolean()) throw SchemaError("significant: expected a boolean");
  r.significant = significant.get<bool>();
  return r;
}

RunResults load_results(const std::filesystem::path& path) {
  try {
    return results_from_json(read_json_file(path));
  } catch (const VersionError& e) {
    throw VersionError(path.string() + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

RunResults summarize_outcomes(RunManifest manifest,
                              std::vector<LeakageOutcome> outcomes,
                              double alpha) {
  RunResults r;
  r.manifest = std::move(manifest);
  r.outcomes = std::move(outcomes);
  r.summary = summarize(r.outcomes);
  r.alpha = alpha;
  std::vector<double> diffs;
  for (const LeakageOutcome& o : r.outcomes) {
    if (o.label != ExpressionLabel::kNeutral) diffs.push_back(o.paired_diff);
  }
  if (diffs.empty()) {
    r.wilcoxon_note = "no negative or positive outcomes";
  } else {
    try {
      r.wilcoxon = wilcoxon_one_sided(diffs);
      r.significant = significance_gate(*r.wilcoxon, alpha);
    } catch (const DegenerateError&) {
      r.wilcoxon_note = "all paired differences are zero";
    }
  }
  return r;
}

RunManifest make_manifest(const Dataset& dataset, const GenerationConfig& cfg,
                          const Backend& backend, const Scorer& scorer) {
  RunManifest m;
  m.dataset_name = dataset.name();
  m.dataset_sha256 = dataset_sha256(dataset);
  m.generation = cfg;
  m.backend = backend.descriptor();
  m.scorer = scorer.descriptor();
  m.splitter_version = std::string(kSplitterVersion);
  m.instruction_prefix = std::string(kCompleteSentencePrefix);
  m.disregard_instruction = std::string(kDisregardInstruction);
  return m;
}

RunResults run_pipeline(const Dataset& dataset, const GenerationConfig& cfg,
                        Backend& backend, Scorer& scorer,
                        const std::filesystem::path& out_dir,
                        const PipelineOptions& opts) {
  std::string stage = "setup";
  try {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    RunManifest manifest = make_manifest(dataset, cfg, backend, scorer);
    const auto manifest_path = out_dir / kManifestFile;
    if (std::filesystem::exists(manifest_path)) {
      const RunManifest existing = manifest_from_json(read_json_file(manifest_path));
      if (!existing.same_run(manifest)) {
        throw ConfigError(out_dir.string() +
                          " holds a different run (differs in: " +
                          manifest_diff(existing, manifest) + ")");
      }
    } else {
      manifest.timestamp = utc_timestamp();
      write_file(manifest_path, manifest_to_json(manifest).dump(2) + "\n");
    }

    stage = "generate";
    GenerationRunOptions gen;
    gen.max_in_flight = opts.max_in_flight;
    gen.checkpoint = out_dir / kGenerationsFile;
    gen.backend_calls = opts.backend_calls;
    const std::vector<GenerationRecord> records =
        run_generations(dataset, cfg, backend, gen);

    stage = "evaluate";
    Evaluation ev = evaluate_run(dataset, records, scorer, cfg.samples_per_prompt);

    stage = "stats";
    manifest.timestamp.clear();
    RunResults results =
        summarize_outcomes(std::move(manifest), std::move(ev.outcomes), opts.alpha);

    stage = "write";
    write_file(out_dir / kResultsFile, results_to_json(results).dump(2) + "\n");
    write_file(out_dir / kOutcomesFile, outcomes_to_csv(results.outcomes));
    write_file(out_dir / kPerLabelFile, per_label_csv(results.summary));
    return results;
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  } catch (const std::filesystem::filesystem_error& e) {
    throw StageError(stage, IoError(e.what()));
  }
}

std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string format_p(const std::optional<WilcoxonResult>& w) {
  if (!w) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", w->p_value);
  return buf;
}

ReportTables render_report(std::span<const RunResults> results) {
  if (results.empty()) throw ArgumentError("report: no results files");
  const std::vector<std::string> head = {"model", "dataset", "mode", "mu_L",
                                         "mu_EL", "W_EL_p", "significant"};
  std::vector<std::vector<std::string>> rows = {head};
  for (const RunResults& r : results) {
    rows.push_back({r.model(), r.manifest.dataset_name,
                    std::string(instruction_mode_name(
                        r.manifest.generation.instruction_mode)),
                    format_rate(r.summary.mu_l),
                    r.summary.n_el > 0 ? format_rate(r.summary.mu_el) : "n/a",
                    format_p(r.wilcoxon), r.significant ? "yes" : "no"});
  }
  const std::vector<std::string> label_head = {"model", "dataset", "mode",
                                               "label", "n", "el_rate", "l_rate"};
  std::vector<std::vector<std::string>> label_rows = {label_head};
  for (const RunResults& r : results) {
    for (ExpressionLabel l : kAllLabels) {
      const LabelRates& rates = r.summary.per_label[index_of(l)];
      label_rows.push_back(
          {r.model(), r.manifest.dataset_name,
           std::string(instruction_mode_name(r.manifest.generation.instruction_mode)),
           std::string(label_name(l)), std::to_string(rates.n),
           format_rate(rates.el_rate), format_rate(rates.l_rate)});
    }
  }
  ReportTables t;
  t.leakage_text = align(rows, 3);
  t.per_label_text = align(label_rows, 4);
  for (const auto& row : rows) t.leakage_csv += csv_row(row);
  for (const auto& row : label_rows) t.per_label_csv += csv_row(row);
  return t;
}

}  // namespace exleak
