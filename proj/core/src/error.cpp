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

#include "grader_audit/error.hpp"

namespace grader_audit {

std::string_view ToString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo: return "Io";
    case ErrorKind::kMalformedCsv: return "MalformedCsv";
    case ErrorKind::kMissingColumn: return "MissingColumn";
    case ErrorKind::kScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorKind::kInconsistentGraderType: return "InconsistentGraderType";
    case ErrorKind::kSelfComparison: return "SelfComparison";
    case ErrorKind::kNegativeTokenCount: return "NegativeTokenCount";
    case ErrorKind::kDegenerateLengths: return "DegenerateLengths";
    case ErrorKind::kSingleLevelFactor: return "SingleLevelFactor";
    case ErrorKind::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kUnknownFactor: return "UnknownFactor";
    case ErrorKind::kInvalidSpec: return "InvalidSpec";
    case ErrorKind::kInvalidScore: return "InvalidScore";
    case ErrorKind::kNonPositiveScale: return "NonPositiveScale";
    case ErrorKind::kNonFiniteDensity: return "NonFiniteDensity";
    case ErrorKind::kAllDivergent: return "AllDivergent";
    case ErrorKind::kNonFiniteAtInit: return "NonFiniteAtInit";
    case ErrorKind::kTooFewDraws: return "TooFewDraws";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kDatasetMismatch: return "DatasetMismatch";
    case ErrorKind::kUnknownParameter: return "UnknownParameter";
    case ErrorKind::kEmptySamples: return "EmptySamples";
    case ErrorKind::kUnknownLevel: return "UnknownLevel";
    case ErrorKind::kNoVariation: return "NoVariation";
    case ErrorKind::kTooFewRatings: return "TooFewRatings";
    case ErrorKind::kMissingItemColumn: return "MissingItemColumn";
    case ErrorKind::kNotOrderedModel: return "NotOrderedModel";
    case ErrorKind::kTooFewModels: return "TooFewModels";
    case ErrorKind::kInvalidTruthShape: return "InvalidTruthShape";
    case ErrorKind::kUnknownScenario: return "UnknownScenario";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(ToString(kind)) + ": " + message),
      kind_(kind) {}

}  // namespace grader_audit
