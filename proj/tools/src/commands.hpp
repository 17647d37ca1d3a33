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

#ifndef GRADER_AUDIT_TOOLS_COMMANDS_HPP_
#define GRADER_AUDIT_TOOLS_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace grader_audit::cli {

// Exit codes shared with CI scripts.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNotConverged = 4;

struct RunConfig {
  std::string scenario;
  std::filesystem::path data;
  std::string preset;
  std::filesystem::path spec;
  int chains = 4;
  int warmup = 1000;
  int draws = 1000;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  double rope_low = -0.18;
  double rope_high = 0.18;
  std::string alpha_metric = "ordinal";
  int alpha_reps = 500;
  // compare: fit directories; agreement/calibrate/report: the run directory.
  std::vector<std::filesystem::path> inputs;
};

int CmdSimulate(const RunConfig& rc);
int CmdFit(const RunConfig& rc);
int CmdCompare(const RunConfig& rc);
int CmdAgreement(const RunConfig& rc);
int CmdCalibrate(const RunConfig& rc);
int CmdReport(const RunConfig& rc);

}  // namespace grader_audit::cli

#endif  // GRADER_AUDIT_TOOLS_COMMANDS_HPP_
