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

#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace grader_audit {
namespace {

using testing_util::WriteTemp;

std::string ScoresCsv(int rows) {
  std::ostringstream out;
  out << "grader,grader_type,llm,item,score\n";
  for (int i = 0; i < rows; ++i) {
    out << (i % 2 ? "human" : "auto") << ',' << (i % 2 ? "human" : "autograder")
        << ",A,item_" << i / 2 << ',' << (i % 10) + 1 << '\n';
  }
  return out.str();
}

TEST(LoadScores, KDefaultsToLargestScore) {
  const Dataset ds = LoadScores(WriteTemp("hundred.csv", ScoresCsv(100)));
  EXPECT_EQ(ds.n_categories(), 10);
  EXPECT_EQ(ds.size(), 100u);
  EXPECT_EQ(ds.kind(), DatasetKind::kScores);
}

TEST(LoadScores, InconsistentGraderType) {
  const auto path = WriteTemp("inconsistent.csv",
                              "grader,grader_type,llm,item,score\n"
                              "G1,human,A,i1,3\nG2,human,A,i1,3\nG1,autograder,A,i2,4\n");
  EXPECT_ERROR_KIND(LoadScores(path), kInconsistentGraderType);
}

TEST(LoadScores, ScoreAboveK) {
  const auto path = WriteTemp("eleven.csv",
                              "grader,grader_type,llm,item,score\nG1,human,A,i1,11\n");
  EXPECT_ERROR_KIND(LoadScores(path, 10), kScoreOutOfRange);
}

TEST(LoadScores, MissingColumn) {
  const auto path = WriteTemp("nocol.csv", "grader,grader_type,item,score\nG,human,i,1\n");
  EXPECT_ERROR_KIND(LoadScores(path), kMissingColumn);
}

TEST(LoadScores, MalformedScore) {
  const auto path = WriteTemp("word.csv", "grader,grader_type,llm,item,score\nG,human,A,i,seven\n");
  EXPECT_ERROR_KIND(LoadScores(path), kMalformedCsv);
}

TEST(LoadScores, MissingFileIsIoError) {
  EXPECT_ERROR_KIND(LoadScores("/nonexistent/dir/x.csv"), kIo);
}

TEST(LoadScores, LevelsFollowFirstAppearance) {
  const auto path = WriteTemp("order.csv",
                              "grader,grader_type,llm,item,score\n"
                              "zeta,human,B,i2,1\nalpha,autograder,A,i1,2\nzeta,human,A,i1,3\n");
  const Dataset ds = LoadScores(path);
  EXPECT_EQ(ds.factor(kGraderFactor).levels(), (std::vector<std::string>{"zeta", "alpha"}));
  EXPECT_EQ(ds.factor(kLlmFactor).levels(), (std::vector<std::string>{"B", "A"}));
  EXPECT_EQ(ds.factor(kGraderTypeFactor).levels(),
            (std::vector<std::string>{"human", "autograder"}));
}

TEST(LoadScores, EmptyItemIsMissing) {
  const auto path = WriteTemp("noitem.csv",
                              "grader,grader_type,llm,item,score\nG,human,A,,2\nG,human,A,i1,1\n");
  const Dataset ds = LoadScores(path);
  EXPECT_FALSE(ds.Level(kItemFactor, 0).has_value());
  EXPECT_TRUE(ds.Level(kItemFactor, 1).has_value());
}

TEST(Dataset, CsvRoundTripKeepsRecordsAndOrder) {
  const Dataset a = LoadScores(WriteTemp("rt_in.csv", ScoresCsv(37)));
  const auto path = WriteTemp("rt_out.csv", "");
  WriteCsv(a, path);
  const Dataset b = LoadScores(path, a.n_categories());
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [name, table] : a.factors()) {
    EXPECT_EQ(table.levels(), b.factor(name).levels()) << name;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.scores()[i].score, b.scores()[i].score);
    EXPECT_EQ(a.scores()[i].grader, b.scores()[i].grader);
    EXPECT_EQ(a.scores()[i].item, b.scores()[i].item);
  }
  EXPECT_EQ(Fingerprint(a), Fingerprint(b));
  EXPECT_EQ(ToCsv(a), ToCsv(b));
}

TEST(Dataset, ReloadGivesSameCodes) {
  const auto path = WriteTemp("stable.csv", ScoresCsv(20));
  const Dataset a = LoadScores(path);
  const Dataset b = LoadScores(path);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.scores()[i].grader, b.scores()[i].grader);
    EXPECT_EQ(a.scores()[i].llm, b.scores()[i].llm);
  }
}

TEST(Dataset, RepeatedAndSubset) {
  const Dataset a = LoadScores(WriteTemp("rep.csv", ScoresCsv(6)));
  EXPECT_EQ(a.Repeated(3).size(), 18u);
  const Dataset s = a.Subset({1, 4});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.scores()[1].score, a.scores()[4].score);
  EXPECT_EQ(s.factor(kGraderFactor).levels(), a.factor(kGraderFactor).levels());
}

TEST(Dataset, RecodedToUsesReferenceCodes) {
  const Dataset ref = LoadScores(WriteTemp("ref.csv",
                                           "grader,grader_type,llm,item,score\n"
                                           "g1,human,A,i1,1\ng2,autograder,B,i1,2\n"));
  const Dataset other = LoadScores(WriteTemp("other.csv",
                                             "grader,grader_type,llm,item,score\n"
                                             "g2,autograder,B,i1,2\n"));
  const Dataset r = other.RecodedTo(ref);
  EXPECT_EQ(r.scores()[0].grader, ref.factor(kGraderFactor).Code("g2"));
  EXPECT_EQ(r.scores()[0].llm, ref.factor(kLlmFactor).Code("B"));
  const Dataset stranger = LoadScores(WriteTemp("stranger.csv",
                                                "grader,grader_type,llm,item,score\n"
                                                "g9,human,A,i1,1\n"),
                                      2);
  EXPECT_ERROR_KIND(stranger.RecodedTo(ref), kUnknownLevel);
}

constexpr const char* kPairHeader =
    "grader,llm_first,llm_second,item,tokens_first,tokens_second,chose_first\n";

TEST(LoadPairwise, ThreeUnorderedPairs) {
  const auto path = WriteTemp("pairs.csv", std::string(kPairHeader) +
                                               "h,A,B,p1,10,20,1\nh,C,A,p1,5,9,0\n"
                                               "h,B,C,p2,7,3,1\nh,B,A,p3,1,2,0\n");
  const Dataset ds = LoadPairwise(path);
  EXPECT_EQ(ds.kind(), DatasetKind::kPairwise);
  EXPECT_EQ(ds.factor(kPairFactor).size(), 3);
  // {B, A} is the same level as {A, B}.
  EXPECT_EQ(ds.pairwise()[3].pair, ds.pairwise()[0].pair);
}

TEST(LoadPairwise, SelfComparison) {
  const auto path = WriteTemp("self.csv", std::string(kPairHeader) + "h,A,A,p,1,2,1\n");
  EXPECT_ERROR_KIND(LoadPairwise(path), kSelfComparison);
}

TEST(LoadPairwise, NegativeTokens) {
  const auto path = WriteTemp("neg.csv", std::string(kPairHeader) + "h,A,B,p,-5,2,1\n");
  EXPECT_ERROR_KIND(LoadPairwise(path), kNegativeTokenCount);
}

TEST(LoadDataset, DispatchesOnHeader) {
  const auto p = WriteTemp("dispatch.csv", std::string(kPairHeader) + "h,A,B,p,1,2,1\nh,A,B,p,3,2,0\n");
  EXPECT_EQ(LoadDataset(p).kind(), DatasetKind::kPairwise);
  EXPECT_EQ(LoadDataset(WriteTemp("d2.csv", ScoresCsv(4))).kind(), DatasetKind::kScores);
}

TEST(StandardizeLengthDiff, TwoOpposites) {
  const auto path = WriteTemp("pm10.csv", std::string(kPairHeader) + "h,A,B,p,20,10,1\nh,A,B,p,10,20,0\n");
  const auto z = StandardizeLengthDiff(LoadPairwise(path));
  // sd of {10, -10} with n - 1 is sqrt(200); oracle value 1/sqrt(2).
  ASSERT_EQ(z.size(), 2u);
  EXPECT_NEAR(z[0], 0.70710678118654752440, 1e-15);
  EXPECT_NEAR(z[1], -0.70710678118654752440, 1e-15);
}

TEST(StandardizeLengthDiff, AllZeroIsDegenerate) {
  const auto path = WriteTemp("zero.csv", std::string(kPairHeader) + "h,A,B,p,5,5,1\nh,A,B,p,9,9,0\n");
  EXPECT_ERROR_KIND(StandardizeLengthDiff(LoadPairwise(path)), kDegenerateLengths);
}

TEST(StandardizeLengthDiff, UnitMomentsProperty) {
  std::ostringstream csv;
  csv << kPairHeader;
  for (int i = 0; i < 57; ++i) {
    csv << "h,A,B,p" << i << ',' << (i * 37) % 101 << ',' << (i * 53) % 89 << ",1\n";
  }
  const auto z = StandardizeLengthDiff(LoadPairwise(WriteTemp("moments.csv", csv.str())));
  const double mean = std::accumulate(z.begin(), z.end(), 0.0) / z.size();
  double ss = 0.0;
  for (double v : z) ss += (v - mean) * (v - mean);
  EXPECT_LT(std::abs(mean), 1e-12);
  EXPECT_NEAR(std::sqrt(ss / (z.size() - 1)), 1.0, 1e-10);
}

TEST(FactorTable, CodesAreABijection) {
  FactorTable t("f");
  EXPECT_EQ(t.Intern("x"), 0);
  EXPECT_EQ(t.Intern("y"), 1);
  EXPECT_EQ(t.Intern("x"), 0);
  EXPECT_EQ(t.Label(1), "y");
  EXPECT_ERROR_KIND(t.Code("z"), kUnknownLevel);
}

}  // namespace
}  // namespace grader_audit
