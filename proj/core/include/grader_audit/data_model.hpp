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

#ifndef GRADER_AUDIT_DATA_MODEL_HPP_
#define GRADER_AUDIT_DATA_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace grader_audit {

// Names of the categorical variables a Dataset can carry.
inline constexpr std::string_view kGraderFactor = "grader";
inline constexpr std::string_view kGraderTypeFactor = "grader_type";
inline constexpr std::string_view kLlmFactor = "llm";
inline constexpr std::string_view kItemFactor = "item";
inline constexpr std::string_view kPairFactor = "pair";

// Name of the standardized token-length covariate of pairwise datasets.
inline constexpr std::string_view kLengthDiffCovariate = "length_diff";

enum class GraderType { kHuman, kAutograder };
enum class DatasetKind { kScores, kPairwise };

std::string_view ToString(GraderType type);
// Case-insensitive "human" / "autograder".
std::optional<GraderType> ParseGraderType(std::string_view text);

// Ordered set of level labels; codes follow first-appearance order.
class FactorTable {
 public:
  FactorTable() = default;
  explicit FactorTable(std::string name) : name_(std::move(name)) {}

  // Returns the code of `label`, appending it as a new level if unseen.
  int Intern(std::string_view label);
  std::optional<int> Find(std::string_view label) const;
  // Throws kUnknownLevel.
  int Code(std::string_view label) const;
  const std::string& Label(int code) const;

  const std::string& name() const { return name_; }
  const std::vector<std::string>& levels() const { return levels_; }
  int size() const { return static_cast<int>(levels_.size()); }

 private:
  std::string name_;
  std::vector<std::string> levels_;
  std::unordered_map<std::string, int> codes_;
};

struct GradeRecord {
  int grader = 0;
  GraderType grader_type = GraderType::kHuman;
  int llm = 0;
  std::optional<int> item;
  int score = 1;
};

struct PairwiseRecord {
  int grader = 0;
  int llm_first = 0;
  int llm_second = 0;
  std::optional<int> item;
  std::int64_t tokens_first = 0;
  std::int64_t tokens_second = 0;
  bool chose_first = false;
  // Level of the unordered pair {llm_first, llm_second} in the pair factor.
  int pair = 0;
};

class Dataset;

// Accumulates records with validation and produces an immutable Dataset.
// Row numbers passed to the Add* calls are used only in error messages.
class DatasetBuilder {
 public:
  explicit DatasetBuilder(DatasetKind kind);

  void AddScore(std::string_view grader, GraderType type, std::string_view llm,
                std::optional<std::string_view> item, int score,
                std::size_t row = 0);
  void AddPairwise(std::string_view grader, std::string_view llm_first,
                   std::string_view llm_second,
                   std::optional<std::string_view> item,
                   std::int64_t tokens_first, std::int64_t tokens_second,
                   bool chose_first, std::size_t row = 0);

  // For Scores: K is `n_categories` if given, else the largest observed score.
  Dataset Build(std::optional<int> n_categories = std::nullopt) &&;

 private:
  FactorTable& Factor(std::string_view name);

  DatasetKind kind_;
  std::map<std::string, FactorTable, std::less<>> factors_;
  std::vector<GradeRecord> scores_;
  std::vector<PairwiseRecord> pairwise_;
  std::vector<std::size_t> rows_;
  std::unordered_map<int, GraderType> grader_types_;
};

class Dataset {
 public:
  Dataset() = default;

  DatasetKind kind() const { return kind_; }
  std::size_t size() const;
  bool empty() const { return size() == 0; }

  const std::vector<GradeRecord>& scores() const { return scores_; }
  const std::vector<PairwiseRecord>& pairwise() const { return pairwise_; }
  // K; zero for pairwise datasets.
  int n_categories() const { return n_categories_; }

  bool HasFactor(std::string_view name) const;
  // Throws kUnknownFactor.
  const FactorTable& factor(std::string_view name) const;
  const std::map<std::string, FactorTable, std::less<>>& factors() const {
    return factors_;
  }

  // Level of `name` for record `row`, or nullopt when the record has no value
  // (an empty item column).
  std::optional<int> Level(std::string_view name, std::size_t row) const;

  // For every grader level, the grader_type level it belongs to.
  std::vector<int> GraderTypeOfGrader() const;

  // Same records with every record repeated `times` times, in order.
  Dataset Repeated(int times) const;
  // Subset of records, preserving factor tables.
  Dataset Subset(const std::vector<std::size_t>& rows) const;
  // Same records re-coded against the factor tables (and K) of `reference`.
  // Throws kUnknownLevel for a label the reference has never seen.
  Dataset RecodedTo(const Dataset& reference) const;

 private:
  friend class DatasetBuilder;

  DatasetKind kind_ = DatasetKind::kScores;
  std::map<std::string, FactorTable, std::less<>> factors_;
  std::vector<GradeRecord> scores_;
  std::vector<PairwiseRecord> pairwise_;
  int n_categories_ = 0;
};

Dataset LoadScores(const std::filesystem::path& path,
                   std::optional<int> k_categories = std::nullopt);
Dataset LoadPairwise(const std::filesystem::path& path);
// Dispatches on the header row.
Dataset LoadDataset(const std::filesystem::path& path,
                    std::optional<int> k_categories = std::nullopt);

// Canonical CSV text in the ingestion schema. Reloading it reproduces the
// records and the factor level order.
std::string ToCsv(const Dataset& ds);
void WriteCsv(const Dataset& ds, const std::filesystem::path& path);

// 16 hex digits identifying the records (FNV-1a over the canonical CSV).
std::string Fingerprint(const Dataset& ds);

// (tokens_first - tokens_second) centred and scaled to unit sample SD
// (n - 1 denominator). Throws kDegenerateLengths on zero variance.
std::vector<double> StandardizeLengthDiff(const Dataset& ds);

}  // namespace grader_audit

#endif  // GRADER_AUDIT_DATA_MODEL_HPP_
