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
#ifndef EXLEAK_ERRORS_H_
#define EXLEAK_ERRORS_H_

#include <stdexcept>
#include <string>
#include <utility>

namespace exleak {

// Process exit codes used by the CLI. Every Error maps onto one of them.
enum class ExitCode : int {
  kOk = 0,
  kGeneric = 1,
  kConfig = 2,
  kTransport = 3,
  kDataIntegrity = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

// Bad caller-supplied arguments (m <= 0, n > |pool|, ...).
class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what)
      : Error(ExitCode::kConfig, what) {}
};

// Invalid configuration, unknown tokenizer, backend rejecting a parameter.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ExitCode::kConfig, what) {}
};

// Endpoint unreachable after the retry policy is exhausted.
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what)
      : Error(ExitCode::kTransport, what) {}
};

// Endpoint answered, but the payload violates the wire protocol.
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what)
      : Error(ExitCode::kTransport, what) {}
};

// File does not parse against a schema. The message names the first
// offending field.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what)
      : Error(ExitCode::kDataIntegrity, what) {}
};

// Parsed fine, but violates a cross-field invariant (duplicate ids, label
// coverage, missing generations, ...).
class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& what)
      : Error(ExitCode::kDataIntegrity, what) {}
};

// Not enough data left to compute a statistic or build a pool.
class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& what)
      : Error(ExitCode::kDataIntegrity, what) {}
};

// Statistically or numerically degenerate input (all-zero differences,
// zero total sampling weight).
class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what)
      : Error(ExitCode::kDataIntegrity, what) {}
};

class VersionError : public Error {
 public:
  explicit VersionError(const std::string& what)
      : Error(ExitCode::kDataIntegrity, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what)
      : Error(ExitCode::kGeneric, what) {}
};

// A pipeline stage failed. Keeps the exit code of the underlying error.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), "stage " + stage + ": " + cause.what()),
        stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace exleak

#endif  // EXLEAK_ERRORS_H_
