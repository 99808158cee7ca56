// Copyright 2026 The ipdsim Authors
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

#ifndef IPD_ERROR_H_
#define IPD_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ipd {

// Error categories. The numeric values are part of the C API (ipd_status).
enum class ErrorKind {
  kContract = 1,      // violated pre/post-condition of an operation
  kConfig = 2,        // invalid or unknown configuration
  kIo = 3,            // filesystem failure
  kVersion = 4,       // checkpoint/dataset written by an incompatible version
  kCorrupt = 5,       // truncated or malformed file
  kPrecondition = 6,  // a required artifact (e.g. checkpoint) is missing
  kNonFinite = 7,     // NaN/Inf in a loss
  kSchema = 8,        // CSV schema mismatch
  kInterrupted = 9,   // stopped on request; partial results were flushed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& w) : Error(ErrorKind::kContract, w) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& w) : Error(ErrorKind::kConfig, w) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& w) : Error(ErrorKind::kIo, w) {}
};

class VersionError : public Error {
 public:
  explicit VersionError(const std::string& w) : Error(ErrorKind::kVersion, w) {}
};

class CorruptError : public Error {
 public:
  explicit CorruptError(const std::string& w) : Error(ErrorKind::kCorrupt, w) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& w)
      : Error(ErrorKind::kPrecondition, w) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& w) : Error(ErrorKind::kSchema, w) {}
};

class InterruptedError : public Error {
 public:
  explicit InterruptedError(const std::string& w) : Error(ErrorKind::kInterrupted, w) {}
};

// Raised when a loss term evaluates to NaN/Inf. `step` is the sequence
// position at which the first offending term was found.
class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& w, std::size_t step)
      : Error(ErrorKind::kNonFinite, w + " (step " + std::to_string(step) + ")"),
        step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace ipd

#endif  // IPD_ERROR_H_
