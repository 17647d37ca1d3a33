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

// Shared helpers for the unit tests.

#ifndef GRADER_AUDIT_TESTS_TEST_UTIL_HPP_
#define GRADER_AUDIT_TESTS_TEST_UTIL_HPP_

#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "grader_audit/error.hpp"

namespace grader_audit::testing_util {

inline std::filesystem::path WriteTemp(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::path(::testing::TempDir()) / "grader_audit_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

}  // namespace grader_audit::testing_util

// Asserts that `stmt` throws grader_audit::Error of the given kind.
#define EXPECT_ERROR_KIND(stmt, expected_kind)                          \
  do {                                                                  \
    try {                                                               \
      stmt;                                                             \
      ADD_FAILURE() << "no exception from " #stmt;                      \
    } catch (const ::grader_audit::Error& e) {                          \
      EXPECT_EQ(e.kind(), ::grader_audit::ErrorKind::expected_kind)     \
          << e.what();                                                  \
    }                                                                   \
  } while (0)

#endif  // GRADER_AUDIT_TESTS_TEST_UTIL_HPP_
