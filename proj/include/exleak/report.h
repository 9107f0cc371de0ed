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
#ifndef EXLEAK_REPORT_H_
#define EXLEAK_REPORT_H_

#include <atomic>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exleak/core.h"
#include "exleak/genpipe.h"
#include "exleak/metrics.h"
#include "exleak/scoring.h"
#include "exleak/serialize.h"
#include "exleak/stats.h"

namespace exleak {

// Contents of results.json. The manifest timestamp is not part of it, so a
// rerun over the same inputs reproduces the file byte for byte.
struct RunResults {
  RunManifest manifest;
  std::vector<LeakageOutcome> outcomes;
  LeakageSummary summary;
  // Test over the paired differences of the negative and positive outcomes.
  // Empty when every difference is zero; wilcoxon_note then says why.
  std::optional<WilcoxonResult> wilcoxon;
  std::string wilcoxon_note;
  double alpha = kDefaultAlpha;
  bool significant = false;

  // Row label used by the comparison tables.
  std::string model() const;
};

Json results_to_json(const RunResults& r);
// Throws VersionError for a newer schema_version, SchemaError otherwise.
RunResults results_from_json(const Json& j);
RunResults load_results(const std::filesystem::path& path);

// Summary statistics from outcomes alone: summary, W_EL and the gate.
RunResults summarize_outcomes(RunManifest manifest,
                              std::vector<LeakageOutcome> outcomes,
                              double alpha = kDefaultAlpha);

struct PipelineOptions {
  int max_in_flight = 4;
  double alpha = kDefaultAlpha;
  std::atomic<long long>* backend_calls = nullptr;
};

// Files written into the output directory.
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kGenerationsFile = "generations.jsonl";
inline constexpr const char* kResultsFile = "results.json";
inline constexpr const char* kOutcomesFile = "outcomes.csv";
inline constexpr const char* kPerLabelFile = "per_label.csv";

RunManifest make_manifest(const Dataset& dataset, const GenerationConfig& cfg,
                          const Backend& backend, const Scorer& scorer);

// Generates (resuming from out_dir/generations.jsonl when present), scores
// and writes every output file. An existing manifest must describe the same
// run, otherwise ConfigError. Failures are rethrown as StageError.
RunResults run_pipeline(const Dataset& dataset, const GenerationConfig& cfg,
                        Backend& backend, Scorer& scorer,
                        const std::filesystem::path& out_dir,
                        const PipelineOptions& opts = {});

// Rates at two decimals, p-values as %.2e.
std::string format_rate(double v);
std::string format_p(const std::optional<WilcoxonResult>& w);

struct ReportTables {
  std::string leakage_text;  // one row per results file
  std::string leakage_csv;
  std::string per_label_text;  // one row per (results file, label)
  std::string per_label_csv;
};

ReportTables render_report(std::span<const RunResults> results);

}  // namespace exleak

#endif  // EXLEAK_REPORT_H_
