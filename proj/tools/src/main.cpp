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

#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "grader_audit/error.hpp"

namespace {

using grader_audit::Error;
using grader_audit::ErrorKind;
namespace cli = grader_audit::cli;

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo:
      return cli::kExitIo;
    // The sampler could not produce usable draws.
    case ErrorKind::kNonFiniteAtInit:
    case ErrorKind::kAllDivergent:
      return cli::kExitNotConverged;
    default:
      return cli::kExitInput;
  }
}

void SamplerFlags(CLI::App* cmd, cli::RunConfig& rc) {
  cmd->add_option("--chains", rc.chains, "Number of chains")->capture_default_str();
  cmd->add_option("--warmup", rc.warmup, "Warmup iterations per chain")->capture_default_str();
  cmd->add_option("--draws", rc.draws, "Post-warmup draws per chain")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian audit of LLM autograders"};
  app.require_subcommand(1);
  cli::RunConfig rc;

  auto* simulate = app.add_subcommand("simulate", "Simulate a dataset from a named scenario");
  simulate->add_option("--scenario", rc.scenario, "Scenario name")->required();

  auto* fit = app.add_subcommand("fit", "Fit a model to a dataset");
  fit->add_option("--data", rc.data, "Scores or pairwise CSV")->required();
  fit->add_option("--preset", rc.preset, "Built-in model preset");
  fit->add_option("--spec", rc.spec, "ModelSpec JSON file");
  SamplerFlags(fit, rc);
  fit->add_option("--rope-low", rc.rope_low, "Lower ROPE bound")->capture_default_str();
  fit->add_option("--rope-high", rc.rope_high, "Upper ROPE bound")->capture_default_str();

  auto* compare = app.add_subcommand("compare", "Rank fits of the same dataset by elpd");
  compare->add_option("fits", rc.inputs, "Fit directories")->required();

  auto* agreement = app.add_subcommand("agreement", "Krippendorff alpha, observed and replicated");
  agreement->add_option("run", rc.inputs, "Fit directory (defaults to --out)");
  agreement->add_option("--alpha-metric", rc.alpha_metric, "ordinal or interval")
      ->check(CLI::IsMember({"ordinal", "interval"}))
      ->capture_default_str();
  agreement->add_option("--alpha-reps", rc.alpha_reps, "Replicated datasets per mode")
      ->capture_default_str();

  auto* calibrate = app.add_subcommand("calibrate", "Cutpoint interval report");
  calibrate->add_option("run", rc.inputs, "Fit directory (defaults to --out)");

  auto* report = app.add_subcommand("report", "Markdown digest of a run directory");
  report->add_option("run", rc.inputs, "Run directory (defaults to --out)");

  for (auto* cmd : {simulate, fit, compare, agreement, calibrate, report}) {
    cmd->add_option("--seed", rc.seed, "Random seed")->capture_default_str();
    cmd->add_option("--out", rc.out, "Output directory");
  }
  simulate->get_option("--out")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitInput;
  }

  try {
    if (*simulate) return cli::CmdSimulate(rc);
    if (*fit) return cli::CmdFit(rc);
    if (*compare) return cli::CmdCompare(rc);
    if (*agreement) return cli::CmdAgreement(rc);
    if (*calibrate) return cli::CmdCalibrate(rc);
    if (*report) return cli::CmdReport(rc);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitInput;
  }
  return cli::kExitInput;
}
