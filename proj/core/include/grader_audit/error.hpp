// Copyright 2026 The grader-audit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GRADER_AUDIT_ERROR_HPP_
#define GRADER_AUDIT_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace grader_audit {

enum class ErrorKind {
  // Ingestion.
  kIo,
  kMalformedCsv,
  kMissingColumn,
  kScoreOutOfRange,
  kInconsistentGraderType,
  kSelfComparison,
  kNegativeTokenCount,
  kDegenerateLengths,
  // Design.
  kSingleLevelFactor,
  kIndexOutOfRange,
  kShapeMismatch,
  kUnknownFactor,
  kInvalidSpec,
  // Densities.
  kInvalidScore,
  kNonPositiveScale,
  kNonFiniteDensity,
  // Sampling and diagnostics.
  kAllDivergent,
  kNonFiniteAtInit,
  kTooFewDraws,
  kInvalidConfig,
  // Comparison and analysis.
  kDatasetMismatch,
  kUnknownParameter,
  kEmptySamples,
  kUnknownLevel,
  kNoVariation,
  kTooFewRatings,
  kMissingItemColumn,
  kNotOrderedModel,
  kTooFewModels,
  // Simulation.
  kInvalidTruthShape,
  kUnknownScenario,
};

std::string_view ToString(ErrorKind kind);

// Single exception type for the library. Callers switch on kind(); the
// message carries the offending row, block or name.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace grader_audit

#endif  // GRADER_AUDIT_ERROR_HPP_
