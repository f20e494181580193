/*
 * Copyright 2026 The fedsim Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDSIM_ERRORS_H_
#define FEDSIM_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace fedsim {

enum class ErrorKind {
  kStructural,  // non-congruent parameter sets, malformed traces
  kDomain,      // argument outside its mathematical domain
  kNumeric,     // NaN/Inf produced
  kData,        // ids out of range, malformed datasets
  kScenario,    // scenario cannot be realized (empty shard, ...)
  kBudget,      // requested computation exceeds a hard cap
  kIo,
  kConfig,
};

std::string_view ErrorKindName(ErrorKind kind);

// Base of every error fedsim throws. Callers that need to branch on the
// category use kind() rather than dynamic_cast.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define FEDSIM_DEFINE_ERROR(Name, Kind)                                 \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& message) : Error(Kind, message) {} \
  }

FEDSIM_DEFINE_ERROR(StructuralError, ErrorKind::kStructural);
FEDSIM_DEFINE_ERROR(DomainError, ErrorKind::kDomain);
FEDSIM_DEFINE_ERROR(NumericError, ErrorKind::kNumeric);
FEDSIM_DEFINE_ERROR(DataError, ErrorKind::kData);
FEDSIM_DEFINE_ERROR(ScenarioError, ErrorKind::kScenario);
FEDSIM_DEFINE_ERROR(BudgetError, ErrorKind::kBudget);
FEDSIM_DEFINE_ERROR(IoError, ErrorKind::kIo);
FEDSIM_DEFINE_ERROR(ConfigError, ErrorKind::kConfig);

#undef FEDSIM_DEFINE_ERROR

// Raised by the runner when a module error aborts a round. kind() is the
// kind of the underlying error.
class RunAbortedError : public Error {
 public:
  RunAbortedError(ErrorKind cause, int round, std::string phase,
                  const std::string& detail);
  int round() const noexcept { return round_; }
  const std::string& phase() const noexcept { return phase_; }

 private:
  int round_;
  std::string phase_;
};

}  // namespace fedsim

#endif  // FEDSIM_ERRORS_H_
