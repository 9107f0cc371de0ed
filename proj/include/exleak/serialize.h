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
#ifndef EXLEAK_SERIALIZE_H_
#define EXLEAK_SERIALIZE_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exleak/core.h"
#include "json.hpp"

namespace exleak {

using Json = nlohmann::json;

// Bumped whenever results.json or manifest.json change incompatibly.
inline constexpr int kResultsSchemaVersion = 1;

// Dataset files. Keys are emitted sorted and samples ordered by id, so the
// byte stream depends only on dataset content.
Json dataset_to_json(const Dataset& d);
// Throws SchemaError naming the first offending field (e.g.
// "samples[2].tests[0].label") or IntegrityError for invariant violations.
Dataset dataset_from_json(const Json& j);
std::string serialize_dataset(const Dataset& d);
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& d, const std::filesystem::path& path);
std::string dataset_sha256(const Dataset& d);

Json record_to_json(const GenerationRecord& r);
GenerationRecord record_from_json(const Json& j);

Json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);
Json generation_config_to_json(const GenerationConfig& c);
GenerationConfig generation_config_from_json(const Json& j);

Json outcome_to_json(const LeakageOutcome& o);
LeakageOutcome outcome_from_json(const Json& j);
// Columns: sample_id,label,el,paired_diff,sem_l,sim_test,sim_ctl
std::string outcomes_to_csv(std::span<const LeakageOutcome> outcomes);

// Shortest decimal representation that round-trips.
std::string format_double(double v);
std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames, so readers never see a
// partially written file. Throws IoError.
void write_file(const std::filesystem::path& path, std::string_view bytes);
Json read_json_file(const std::filesystem::path& path);

}  // namespace exleak

#endif  // EXLEAK_SERIALIZE_H_
