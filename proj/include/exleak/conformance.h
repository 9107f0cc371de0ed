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
#ifndef EXLEAK_CONFORMANCE_H_
#define EXLEAK_CONFORMANCE_H_

#include <cstddef>
#include <string>
#include <vector>

#include "exleak/server.h"

namespace exleak {

struct ConformanceCheck {
  std::string name;
  bool passed = false;
  std::string detail;  // failure reason, empty on success
};

struct ConformanceReport {
  std::string target;
  std::vector<ConformanceCheck> checks;

  bool passed() const;
  // "PASS name" / "FAIL name: detail" lines.
  std::string to_text() const;
};

struct ScorerConformanceOptions {
  std::size_t max_batch = kDefaultMaxBatch;  // the server's advertised limit
  bool check_gpt2 = true;
};

// Exercises a scorer endpoint over HTTP: response schemas, batch order,
// determinism, simplex and dimension constancy, gpt2 counts on fixed texts,
// and the 400/413 error contract.
ConformanceReport run_scorer_conformance(const std::string& url,
                                         const ScorerConformanceOptions& opts = {});

// Exercises a generation endpoint in both dialects: response schemas, seed
// determinism, max_tokens honoured, parameter rejection naming the field,
// and the client adapters.
ConformanceReport run_backend_conformance(const std::string& url,
                                          const std::string& model = "stub");

}  // namespace exleak

#endif  // EXLEAK_CONFORMANCE_H_
