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

#include "grader_audit/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "grader_audit/error.hpp"

namespace grader_audit {

namespace {

constexpr std::string_view kScoresHeader = "grader,grader_type,llm,item,score";
constexpr std::string_view kPairwiseHeader =
    "grader,llm_first,llm_second,item,tokens_first,tokens_second,chose_first";

std::string Lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string Trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return std::string(text.substr(first, last - first + 1));
}

// RFC 4180 field splitting for a single physical line.
std::vector<std::string> SplitCsvLine(const std::string& line,
                                      std::size_t row) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(Trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) {
    throw Error(ErrorKind::kMalformedCsv,
                "unterminated quote on line " + std::to_string(row));
  }
  fields.push_back(Trim(field));
  return fields;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

CsvTable ReadCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open " + path.string());
  }
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    auto fields = SplitCsvLine(line, line_no);
    if (!have_header) {
      for (auto& f : fields) f = Lower(f);
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) {
    throw Error(ErrorKind::kMissingColumn, path.string() + " has no header");
  }
  return table;
}

std::vector<std::size_t> ColumnIndices(const CsvTable& table,
                                       std::string_view schema) {
  std::vector<std::size_t> indices;
  std::stringstream ss{std::string(schema)};
  std::string column;
  while (std::getline(ss, column, ',')) {
    const auto it =
        std::find(table.header.begin(), table.header.end(), column);
    if (it == table.header.end()) {
      throw Error(ErrorKind::kMissingColumn, "missing column '" + column + "'");
    }
    indices.push_back(static_cast<std::size_t>(it - table.header.begin()));
  }
  return indices;
}

template <typename Int>
Int ParseInt(const std::string& text, std::string_view column,
             std::size_t line) {
  Int value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw Error(ErrorKind::kMalformedCsv,
                "line " + std::to_string(line) + ": column " +
                    std::string(column) + " is not an integer: '" + text + "'");
  }
  return value;
}

const std::string& Field(const std::vector<std::string>& row, std::size_t index,
                         std::size_t line) {
  if (index >= row.size()) {
    throw Error(ErrorKind::kMalformedCsv,
                "line " + std::to_string(line) + " has too few fields");
  }
  return row[index];
}

std::string QuoteIfNeeded(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (const char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string PairLabel(const std::string& a, const std::string& b) {
  return a < b ? a + "_vs_" + b : b + "_vs_" + a;
}

}  // namespace

std::string_view ToString(GraderType type) {
  return type == GraderType::kHuman ? "human" : "autograder";
}

std::optional<GraderType> ParseGraderType(std::string_view text) {
  const std::string lower = Lower(Trim(text));
  if (lower == "human") return GraderType::kHuman;
  if (lower == "autograder") return GraderType::kAutograder;
  return std::nullopt;
}

int FactorTable::Intern(std::string_view label) {
  const std::string key(label);
  if (const auto it = codes_.find(key); it != codes_.end()) return it->second;
  const int code = size();
  levels_.push_back(key);
  codes_.emplace(key, code);
  return code;
}

std::optional<int> FactorTable::Find(std::string_view label) const {
  const auto it = codes_.find(std::string(label));
  if (it == codes_.end()) return std::nullopt;
  return it->second;
}

int FactorTable::Code(std::string_view label) const {
  if (const auto code = Find(label)) return *code;
  throw Error(ErrorKind::kUnknownLevel, "factor '" + name_ + "' has no level '" +
                                            std::string(label) + "'");
}

const std::string& FactorTable::Label(int code) const {
  if (code < 0 || code >= size()) {
    throw Error(ErrorKind::kIndexOutOfRange,
                "factor '" + name_ + "' has no code " + std::to_string(code));
  }
  return levels_[static_cast<std::size_t>(code)];
}

DatasetBuilder::DatasetBuilder(DatasetKind kind) : kind_(kind) {
  Factor(kGraderFactor);
  Factor(kLlmFactor);
  Factor(kItemFactor);
  if (kind == DatasetKind::kScores) {
    Factor(kGraderTypeFactor);
  } else {
    Factor(kPairFactor);
  }
}

FactorTable& DatasetBuilder::Factor(std::string_view name) {
  auto it = factors_.find(name);
  if (it == factors_.end()) {
    it = factors_.emplace(std::string(name), FactorTable(std::string(name)))
             .first;
  }
  return it->second;
}

void DatasetBuilder::AddScore(std::string_view grader, GraderType type,
                              std::string_view llm,
                              std::optional<std::string_view> item, int score,
                              std::size_t row) {
  if (kind_ != DatasetKind::kScores) {
    throw Error(ErrorKind::kShapeMismatch, "score record in pairwise dataset");
  }
  if (score < 1) {
    throw Error(ErrorKind::kScoreOutOfRange,
                "row " + std::to_string(row) + ": score " +
                    std::to_string(score) + " is below 1");
  }
  GradeRecord rec;
  rec.grader = Factor(kGraderFactor).Intern(grader);
  const auto [it, inserted] = grader_types_.emplace(rec.grader, type);
  if (!inserted && it->second != type) {
    throw Error(ErrorKind::kInconsistentGraderType,
                "row " + std::to_string(row) + ": grader '" +
                    std::string(grader) + "' was " +
                    std::string(ToString(it->second)) + " and is now " +
                    std::string(ToString(type)));
  }
  rec.grader_type = type;
  Factor(kGraderTypeFactor).Intern(ToString(type));
  rec.llm = Factor(kLlmFactor).Intern(llm);
  if (item && !item->empty()) rec.item = Factor(kItemFactor).Intern(*item);
  rec.score = score;
  scores_.push_back(rec);
  rows_.push_back(row);
}

void DatasetBuilder::AddPairwise(std::string_view grader,
                                 std::string_view llm_first,
                                 std::string_view llm_second,
                                 std::optional<std::string_view> item,
                                 std::int64_t tokens_first,
                                 std::int64_t tokens_second, bool chose_first,
                                 std::size_t row) {
  if (kind_ != DatasetKind::kPairwise) {
    throw Error(ErrorKind::kShapeMismatch, "pairwise record in scores dataset");
  }
  if (llm_first == llm_second) {
    throw Error(ErrorKind::kSelfComparison,
                "row " + std::to_string(row) + ": '" + std::string(llm_first) +
                    "' compared with itself");
  }
  if (tokens_first < 0 || tokens_second < 0) {
    throw Error(ErrorKind::kNegativeTokenCount,
                "row " + std::to_string(row) + ": negative token count");
  }
  PairwiseRecord rec;
  rec.grader = Factor(kGraderFactor).Intern(grader);
  rec.llm_first = Factor(kLlmFactor).Intern(llm_first);
  rec.llm_second = Factor(kLlmFactor).Intern(llm_second);
  rec.pair = Factor(kPairFactor)
                 .Intern(PairLabel(std::string(llm_first),
                                   std::string(llm_second)));
  if (item && !item->empty()) rec.item = Factor(kItemFactor).Intern(*item);
  rec.tokens_first = tokens_first;
  rec.tokens_second = tokens_second;
  rec.chose_first = chose_first;
  pairwise_.push_back(rec);
  rows_.push_back(row);
}

Dataset DatasetBuilder::Build(std::optional<int> n_categories) && {
  Dataset ds;
  ds.kind_ = kind_;
  if (kind_ == DatasetKind::kScores) {
    int max_score = 0;
    for (const auto& rec : scores_) max_score = std::max(max_score, rec.score);
    const int k = n_categories.value_or(max_score);
    if (k < 2) {
      throw Error(ErrorKind::kScoreOutOfRange,
                  "need at least 2 score categories, got K=" +
                      std::to_string(k));
    }
    for (std::size_t i = 0; i < scores_.size(); ++i) {
      if (scores_[i].score > k) {
        throw Error(ErrorKind::kScoreOutOfRange,
                    "row " + std::to_string(rows_[i]) + ": score " +
                        std::to_string(scores_[i].score) + " exceeds K=" +
                        std::to_string(k));
      }
    }
    ds.n_categories_ = k;
  }
  ds.factors_ = std::move(factors_);
  ds.scores_ = std::move(scores_);
  ds.pairwise_ = std::move(pairwise_);
  return ds;
}

std::size_t Dataset::size() const {
  return kind_ == DatasetKind::kScores ? scores_.size() : pairwise_.size();
}

bool Dataset::HasFactor(std::string_view name) const {
  return factors_.find(name) != factors_.end();
}

const FactorTable& Dataset::factor(std::string_view name) const {
  const auto it = factors_.find(name);
  if (it == factors_.end()) {
    throw Error(ErrorKind::kUnknownFactor,
                "dataset has no factor '" + std::string(name) + "'");
  }
  return it->second;
}

std::optional<int> Dataset::Level(std::string_view name, std::size_t row) const {
  if (kind_ == DatasetKind::kScores) {
    const auto& rec = scores_.at(row);
    if (name == kGraderFactor) return rec.grader;
    if (name == kLlmFactor) return rec.llm;
    if (name == kItemFactor) return rec.item;
    if (name == kGraderTypeFactor) {
      return factor(kGraderTypeFactor).Code(ToString(rec.grader_type));
    }
  } else {
    const auto& rec = pairwise_.at(row);
    if (name == kGraderFactor) return rec.grader;
    if (name == kPairFactor) return rec.pair;
    if (name == kItemFactor) return rec.item;
  }
  throw Error(ErrorKind::kUnknownFactor,
              "records carry no factor '" + std::string(name) + "'");
}

std::vector<int> Dataset::GraderTypeOfGrader() const {
  const auto& graders = factor(kGraderFactor);
  const auto& types = factor(kGraderTypeFactor);
  std::vector<int> out(static_cast<std::size_t>(graders.size()), 0);
  for (const auto& rec : scores_) {
    out[static_cast<std::size_t>(rec.grader)] =
        types.Code(ToString(rec.grader_type));
  }
  return out;
}

Dataset Dataset::Repeated(int times) const {
  Dataset out = *this;
  out.scores_.clear();
  out.pairwise_.clear();
  for (int t = 0; t < times; ++t) {
    out.scores_.insert(out.scores_.end(), scores_.begin(), scores_.end());
    out.pairwise_.insert(out.pairwise_.end(), pairwise_.begin(),
                         pairwise_.end());
  }
  return out;
}

Dataset Dataset::Subset(const std::vector<std::size_t>& rows) const {
  Dataset out = *this;
  out.scores_.clear();
  out.pairwise_.clear();
  for (const std::size_t r : rows) {
    if (kind_ == DatasetKind::kScores) {
      out.scores_.push_back(scores_.at(r));
    } else {
      out.pairwise_.push_back(pairwise_.at(r));
    }
  }
  return out;
}

Dataset Dataset::RecodedTo(const Dataset& reference) const {
  if (reference.kind_ != kind_) {
    throw Error(ErrorKind::kShapeMismatch, "datasets are of different kinds");
  }
  const auto recode = [&](std::string_view factor_name, int code) {
    const std::string& label = factor(factor_name).Label(code);
    return reference.factor(factor_name).Code(label);
  };
  Dataset out;
  out.kind_ = kind_;
  out.factors_ = reference.factors_;
  out.n_categories_ = reference.n_categories_;
  for (GradeRecord r : scores_) {
    r.grader = recode(kGraderFactor, r.grader);
    r.llm = recode(kLlmFactor, r.llm);
    if (r.item) r.item = recode(kItemFactor, *r.item);
    out.scores_.push_back(r);
  }
  for (PairwiseRecord r : pairwise_) {
    r.grader = recode(kGraderFactor, r.grader);
    r.llm_first = recode(kLlmFactor, r.llm_first);
    r.llm_second = recode(kLlmFactor, r.llm_second);
    r.pair = recode(kPairFactor, r.pair);
    if (r.item) r.item = recode(kItemFactor, *r.item);
    out.pairwise_.push_back(r);
  }
  return out;
}

Dataset LoadScores(const std::filesystem::path& path,
                   std::optional<int> k_categories) {
  const CsvTable table = ReadCsv(path);
  const auto col = ColumnIndices(table, kScoresHeader);
  DatasetBuilder builder(DatasetKind::kScores);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    const auto& type_text = Field(row, col[1], line);
    const auto type = ParseGraderType(type_text);
    if (!type) {
      throw Error(ErrorKind::kMalformedCsv,
                  "line " + std::to_string(line) + ": unknown grader_type '" +
                      type_text + "'");
    }
    const auto& item = Field(row, col[3], line);
    builder.AddScore(Field(row, col[0], line), *type, Field(row, col[2], line),
                     item.empty() ? std::nullopt
                                  : std::optional<std::string_view>(item),
                     ParseInt<int>(Field(row, col[4], line), "score", line),
                     line);
  }
  return std::move(builder).Build(k_categories);
}

Dataset LoadPairwise(const std::filesystem::path& path) {
  const CsvTable table = ReadCsv(path);
  const auto col = ColumnIndices(table, kPairwiseHeader);
  DatasetBuilder builder(DatasetKind::kPairwise);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    const auto& item = Field(row, col[3], line);
    const auto& chose = Field(row, col[6], line);
    if (chose != "0" && chose != "1") {
      throw Error(ErrorKind::kMalformedCsv,
                  "line " + std::to_string(line) +
                      ": chose_first must be 0 or 1, got '" + chose + "'");
    }
    builder.AddPairwise(
        Field(row, col[0], line), Field(row, col[1], line),
        Field(row, col[2], line),
        item.empty() ? std::nullopt : std::optional<std::string_view>(item),
        ParseInt<std::int64_t>(Field(row, col[4], line), "tokens_first", line),
        ParseInt<std::int64_t>(Field(row, col[5], line), "tokens_second", line),
        chose == "1", line);
  }
  return std::move(builder).Build();
}

Dataset LoadDataset(const std::filesystem::path& path,
                    std::optional<int> k_categories) {
  const CsvTable table = ReadCsv(path);
  const auto has = [&](std::string_view name) {
    return std::find(table.header.begin(), table.header.end(), name) !=
           table.header.end();
  };
  if (has("chose_first") || has("llm_first")) return LoadPairwise(path);
  return LoadScores(path, k_categories);
}

std::string ToCsv(const Dataset& ds) {
  std::ostringstream out;
  const auto item_label = [&](const std::optional<int>& item) {
    return item ? QuoteIfNeeded(ds.factor(kItemFactor).Label(*item))
                : std::string();
  };
  const auto& graders = ds.factor(kGraderFactor);
  const auto& llms = ds.factor(kLlmFactor);
  if (ds.kind() == DatasetKind::kScores) {
    out << kScoresHeader << '\n';
    for (const auto& rec : ds.scores()) {
      out << QuoteIfNeeded(graders.Label(rec.grader)) << ','
          << ToString(rec.grader_type) << ','
          << QuoteIfNeeded(llms.Label(rec.llm)) << ',' << item_label(rec.item)
          << ',' << rec.score << '\n';
    }
  } else {
    out << kPairwiseHeader << '\n';
    for (const auto& rec : ds.pairwise()) {
      out << QuoteIfNeeded(graders.Label(rec.grader)) << ','
          << QuoteIfNeeded(llms.Label(rec.llm_first)) << ','
          << QuoteIfNeeded(llms.Label(rec.llm_second)) << ','
          << item_label(rec.item) << ',' << rec.tokens_first << ','
          << rec.tokens_second << ',' << (rec.chose_first ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

void WriteCsv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << ToCsv(ds);
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

std::string Fingerprint(const Dataset& ds) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  const auto mix = [&hash](std::string_view bytes) {
    for (const unsigned char c : bytes) {
      hash ^= c;
      hash *= 0x100000001b3ULL;
    }
  };
  mix(ToCsv(ds));
  mix("K=" + std::to_string(ds.n_categories()));
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[hash & 0xF];
    hash >>= 4;
  }
  return out;
}

std::vector<double> StandardizeLengthDiff(const Dataset& ds) {
  if (ds.kind() != DatasetKind::kPairwise) {
    throw Error(ErrorKind::kShapeMismatch,
                "length differences need a pairwise dataset");
  }
  const auto& recs = ds.pairwise();
  if (recs.size() < 2) {
    throw Error(ErrorKind::kDegenerateLengths,
                "need at least two records to standardize lengths");
  }
  std::vector<double> diff(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    diff[i] = static_cast<double>(recs[i].tokens_first - recs[i].tokens_second);
  }
  double mean = 0.0;
  for (const double d : diff) mean += d;
  mean /= static_cast<double>(diff.size());
  double ss = 0.0;
  for (const double d : diff) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(diff.size() - 1));
  if (!(sd > 0.0)) {
    throw Error(ErrorKind::kDegenerateLengths,
                "all token-length differences are equal");
  }
  for (double& d : diff) d = (d - mean) / sd;
  return diff;
}

}  // namespace grader_audit
