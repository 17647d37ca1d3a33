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

#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

#include "grader_audit/analysis.hpp"
#include "grader_audit/compare.hpp"
#include "grader_audit/data_model.hpp"
#include "grader_audit/design.hpp"
#include "grader_audit/error.hpp"
#include "grader_audit/inference.hpp"
#include "grader_audit/simulate.hpp"

namespace grader_audit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Fixed file names inside a fit directory.
constexpr const char* kData = "data.csv";
constexpr const char* kSpec = "spec.json";
constexpr const char* kFit = "fit.json";
constexpr const char* kDraws = "draws.csv";
constexpr const char* kDiagnostics = "diagnostics.json";
constexpr const char* kSummary = "summary.json";
constexpr const char* kSummaryCsv = "summary.csv";
constexpr const char* kComparison = "comparison.json";
constexpr const char* kComparisonCsv = "comparison.csv";
constexpr const char* kAgreement = "agreement.json";
constexpr const char* kAlphaCsv = "alpha_samples.csv";
constexpr const char* kCalibration = "calibration.json";
constexpr const char* kReport = "report.md";

std::string Fmt(double x, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

void MakeDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

void WriteJson(const fs::path& path, const json& j) { WriteText(path, j.dump(2) + "\n"); }

json ReadJson(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kMalformedCsv, path.string() + ": " + e.what());
  }
}

void Require(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::kInvalidConfig, "missing " + what + " (" + path.string() + ")");
  }
}

ModelSpec ResolveSpec(const RunConfig& rc, int k) {
  if (rc.preset.empty() == rc.spec.empty()) {
    throw Error(ErrorKind::kInvalidConfig, "give exactly one of --preset or --spec");
  }
  ModelSpec spec;
  if (!rc.preset.empty()) {
    const auto p = ParsePreset(rc.preset);
    if (!p) {
      std::string valid;
      for (const auto q : kAllPresets) valid += (valid.empty() ? "" : ", ") + std::string(ToString(q));
      throw Error(ErrorKind::kInvalidSpec,
                  "unknown preset '" + rc.preset + "' (valid: " + valid + ")");
    }
    spec = MakePreset(*p, k);
  } else {
    try {
      spec = ReadJson(rc.spec).get<ModelSpec>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kInvalidSpec, rc.spec.string() + ": " + e.what());
    }
  }
  spec.Validate();
  return spec;
}

// Everything a downstream command needs from a fit directory.
struct LoadedFit {
  fs::path dir;
  json meta;
  ModelSpec spec;
  Dataset data;
  PosteriorDraws draws;
};

LoadedFit LoadFit(const fs::path& dir) {
  for (const char* f : {kData, kSpec, kFit, kDraws}) Require(dir / f, std::string("fit artifact ") + f);
  LoadedFit fit;
  fit.dir = dir;
  fit.meta = ReadJson(dir / kFit);
  try {
    fit.spec = ReadJson(dir / kSpec).get<ModelSpec>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidSpec, (dir / kSpec).string() + ": " + e.what());
  }
  fit.data = LoadDataset(dir / kData, fit.spec.ordered()
                                          ? std::optional<int>(fit.spec.n_categories)
                                          : std::nullopt);
  fit.draws = ReadDrawsCsv(dir / kDraws, fit.meta.at("n_free").get<int>());
  fit.draws.seed = fit.meta.at("seed").get<std::uint64_t>();
  return fit;
}

std::string CsvCell(const std::string& cell) {
  if (cell.find_first_of(",\"") == std::string::npos) return cell;
  std::string out = "\"";
  for (const char ch : cell) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

std::string SummaryCsv(const std::vector<Summary>& rows) {
  std::ostringstream out;
  out << "parameter,mean,ci_low,ci_high\n";
  char buf[128];
  for (const auto& s : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", s.mean, s.ci_low, s.ci_high);
    out << CsvCell(s.name) << ',' << buf << '\n';
  }
  return out.str();
}

}  // namespace

int CmdSimulate(const RunConfig& rc) {
  const ScenarioConfig cfg = DefaultScenario(rc.scenario, rc.seed);
  const SimulationResult sim = Simulate(cfg);
  MakeDir(rc.out);
  const char* file = cfg.kind == DatasetKind::kScores ? "scores.csv" : "pairwise.csv";
  WriteCsv(sim.data, rc.out / file);
  json truth = cfg;
  truth["records"] = sim.data.size();
  truth["fingerprint"] = Fingerprint(sim.data);
  WriteJson(rc.out / "truth.json", truth);
  std::cout << "wrote " << sim.data.size() << " records to " << (rc.out / file).string() << "\n";
  return kExitOk;
}

int CmdFit(const RunConfig& rc) {
  // Parse and validate everything before touching the output directory so a
  // bad input leaves nothing behind.
  if (rc.data.empty()) throw Error(ErrorKind::kInvalidConfig, "--data is required");
  if (rc.out.empty()) throw Error(ErrorKind::kInvalidConfig, "--out is required");
  const Dataset probe = LoadDataset(rc.data);
  const int k = std::max(10, probe.n_categories());
  ModelSpec spec = ResolveSpec(rc, k);
  if (spec.ordered() && spec.n_categories == 0) spec.n_categories = k;
  const Dataset ds = spec.ordered() ? LoadDataset(rc.data, spec.n_categories) : probe;
  const Model model(spec, ds);
  SamplerConfig cfg;
  cfg.chains = rc.chains;
  cfg.warmup_iterations = rc.warmup;
  cfg.sampling_iterations = rc.draws;
  cfg.seed = rc.seed;
  cfg.Validate();
  if (rc.rope_low >= rc.rope_high) {
    throw Error(ErrorKind::kInvalidConfig, "--rope-low must be below --rope-high");
  }

  const PosteriorDraws draws = Sample(model, cfg);
  const Diagnostics diag = Diagnose(draws);

  MakeDir(rc.out);
  WriteCsv(ds, rc.out / kData);
  WriteJson(rc.out / kSpec, json(spec));
  WriteJson(rc.out / kFit, json{{"model", spec.name},
                                {"fingerprint", Fingerprint(ds)},
                                {"records", ds.size()},
                                {"n_free", draws.n_free()},
                                {"seed", rc.seed},
                                {"chains", cfg.chains},
                                {"warmup", cfg.warmup_iterations},
                                {"draws", cfg.sampling_iterations}});
  WriteDrawsCsv(draws, rc.out / kDraws);
  WriteJson(rc.out / kDiagnostics, json(diag));

  const PosteriorDraws ident = WithIdentified(model, draws);
  const auto params = SummarizeAll(ident);
  json contrasts = json::array();
  for (const auto& cs : StandardContrasts(model, ds)) {
    const ContrastResult r = Contrast(ident, cs);
    json c = r;
    c["rope"] = RopeCheck(r.samples, rc.rope_low, rc.rope_high);
    contrasts.push_back(std::move(c));
  }
  json summary{{"model", spec.name}, {"parameters", params}, {"contrasts", contrasts}};
  if (ds.kind() == DatasetKind::kPairwise && ds.factor(kLlmFactor).size() >= 3) {
    summary["transitivity"] = TransitivityCheck(model, draws);
  }
  WriteJson(rc.out / kSummary, summary);
  WriteText(rc.out / kSummaryCsv, SummaryCsv(params));

  if (!diag.converged) {
    std::cerr << "not converged: " << diag.note << "\n";
    return kExitNotConverged;
  }
  std::cout << "fit " << spec.name << " converged; outputs in " << rc.out.string() << "\n";
  return kExitOk;
}

int CmdCompare(const RunConfig& rc) {
  if (rc.inputs.size() < 2) {
    throw Error(ErrorKind::kInvalidConfig, "compare needs at least two fit directories");
  }
  if (rc.out.empty()) throw Error(ErrorKind::kInvalidConfig, "--out is required");
  std::vector<ModelFit> fits;
  std::string first_fp;
  for (const auto& dir : rc.inputs) {
    const LoadedFit f = LoadFit(dir);
    const std::string fp = f.meta.at("fingerprint").get<std::string>();
    if (!first_fp.empty() && fp != first_fp) {
      throw Error(ErrorKind::kDatasetMismatch, dir.string() +
                                                   " was fitted to a different dataset than " +
                                                   rc.inputs.front().string());
    }
    first_fp = fp;
    const Model model(f.spec, f.data);
    const PointwiseLogLik ll = PointwiseLoglik(model, f.draws);
    ModelFit m;
    m.name = f.spec.name;
    m.fingerprint = fp;
    m.waic = Waic(ll);
    m.loo = PsisLoo(ll);
    fits.push_back(std::move(m));
  }
  const ComparisonReport report = CompareModels(fits);
  MakeDir(rc.out);
  WriteJson(rc.out / kComparison, json(report));
  WriteText(rc.out / kComparisonCsv, ToCsv(report));
  for (const auto& e : report.ranking) {
    std::cout << e.name << "  elpd_loo " << Fmt(e.elpd_loo, 2) << " +/- " << Fmt(e.se_loo, 2)
              << "  delta " << Fmt(e.delta_elpd, 2) << "\n";
  }
  return kExitOk;
}

namespace {

fs::path RunDir(const RunConfig& rc) {
  if (!rc.inputs.empty()) return rc.inputs.front();
  if (!rc.out.empty()) return rc.out;
  throw Error(ErrorKind::kInvalidConfig, "no run directory given");
}

fs::path OutDir(const RunConfig& rc) { return rc.out.empty() ? RunDir(rc) : rc.out; }

}  // namespace

int CmdAgreement(const RunConfig& rc) {
  const auto metric = ParseAlphaMetric(rc.alpha_metric);
  if (!metric) throw Error(ErrorKind::kInvalidConfig, "--alpha-metric must be ordinal or interval");
  if (rc.alpha_reps < 1) throw Error(ErrorKind::kInvalidConfig, "--alpha-reps must be >= 1");
  const LoadedFit f = LoadFit(RunDir(rc));
  const AgreementReport report = Agreement(f.spec, f.data, f.draws, *metric, rc.alpha_reps, rc.seed);
  const fs::path out = OutDir(rc);
  MakeDir(out);
  WriteJson(out / kAgreement, json(report));
  std::ostringstream csv;
  csv << "mode,replicate,alpha\n";
  char buf[64];
  for (const AlphaSample* s : {&report.posterior, &report.counterfactual}) {
    for (std::size_t i = 0; i < s->samples.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", s->samples[i]);
      csv << ToString(s->mode) << ',' << i << ',' << buf << '\n';
    }
  }
  WriteText(out / kAlphaCsv, csv.str());
  std::cout << "alpha observed " << Fmt(report.alpha_observed) << ", posterior mean "
            << Fmt(report.posterior.summary.mean) << ", counterfactual mean "
            << Fmt(report.counterfactual.summary.mean) << "\n";
  return kExitOk;
}

int CmdCalibrate(const RunConfig& rc) {
  const LoadedFit f = LoadFit(RunDir(rc));
  const CalibrationReport report = CutpointReport(f.draws);
  const fs::path out = OutDir(rc);
  MakeDir(out);
  WriteJson(out / kCalibration, json{{"model", f.spec.name}, {"cutpoints", report}});
  for (const auto& e : report.cutpoints) {
    std::cout << "c" << e.index << " " << Fmt(e.value, 2);
    if (e.interval) std::cout << "  size " << Fmt(*e.interval, 2) << "  " << ToString(*e.classification);
    std::cout << "\n";
  }
  return kExitOk;
}

namespace {

void SummaryTable(std::ostringstream& md, const json& rows) {
  md << "| name | mean | 2.5% | 97.5% |\n|---|---|---|---|\n";
  for (const auto& r : rows) {
    const auto num = [&](const char* key) {
      return r.at(key).is_number() ? Fmt(r.at(key).get<double>()) : std::string("n/a");
    };
    md << "| " << r.at("name").get<std::string>() << " | " << num("mean") << " | "
       << num("ci_low") << " | " << num("ci_high") << " |\n";
  }
  md << "\n";
}

}  // namespace

int CmdReport(const RunConfig& rc) {
  const fs::path dir = RunDir(rc);
  const auto has = [&](const char* f) { return fs::exists(dir / f); };
  if (!has(kFit) && !has(kComparison) && !has(kAgreement) && !has(kCalibration)) {
    throw Error(ErrorKind::kInvalidConfig,
                "no fit, comparison, agreement or calibration artifacts in " + dir.string());
  }
  std::ostringstream md;
  md << "# grader-audit report\n\n";
  if (has(kFit)) {
    const json fit = ReadJson(dir / kFit);
    md << "## Fit\n\nModel `" << fit.at("model").get<std::string>() << "` on "
       << fit.at("records").get<std::size_t>() << " records (dataset "
       << fit.at("fingerprint").get<std::string>() << "), " << fit.at("chains").get<int>()
       << " chains of " << fit.at("draws").get<int>() << " draws after "
       << fit.at("warmup").get<int>() << " warmup, seed " << fit.at("seed").get<std::uint64_t>()
       << ".\n\n";
  }
  if (has(kDiagnostics)) {
    const json d = ReadJson(dir / kDiagnostics);
    md << "## Diagnostics\n\n"
       << (d.at("converged").get<bool>() ? "Converged."
                                         : "Not converged: " + d.at("note").get<std::string>())
       << "\n\n";
  }
  if (has(kSummary)) {
    const json s = ReadJson(dir / kSummary);
    md << "## Parameters\n\n";
    SummaryTable(md, s.at("parameters"));
    if (!s.at("contrasts").empty()) {
      md << "## Contrasts\n\n| contrast | mean | 2.5% | 97.5% | ROPE verdict |\n"
            "|---|---|---|---|---|\n";
      for (const auto& c : s.at("contrasts")) {
        md << "| " << c.at("name").get<std::string>() << " | " << Fmt(c.at("mean").get<double>())
           << " | " << Fmt(c.at("ci_low").get<double>()) << " | "
           << Fmt(c.at("ci_high").get<double>()) << " | "
           << c.at("rope").at("verdict").get<std::string>() << " |\n";
      }
      md << "\n";
    }
    if (s.contains("transitivity")) {
      const json& t = s.at("transitivity");
      md << "## Transitivity\n\nCycle in posterior means: " << (t.at("cycle").get<bool>() ? "yes" : "no")
         << "; cycle frequency over draws " << Fmt(t.at("cycle_frequency").get<double>())
         << ".\n\n";
    }
  }
  if (has(kComparison)) {
    const json c = ReadJson(dir / kComparison);
    md << "## Model comparison\n\n| model | elpd_loo | se | delta | delta se | elpd_waic |\n"
          "|---|---|---|---|---|---|\n";
    for (const auto& e : c.at("ranking")) {
      md << "| " << e.at("name").get<std::string>() << " | " << Fmt(e.at("elpd_loo").get<double>(), 2)
         << " | " << Fmt(e.at("se_loo").get<double>(), 2) << " | "
         << Fmt(e.at("delta_elpd").get<double>(), 2) << " | "
         << Fmt(e.at("delta_se").get<double>(), 2) << " | "
         << Fmt(e.at("elpd_waic").get<double>(), 2) << " |\n";
    }
    md << "\n";
  }
  if (has(kAgreement)) {
    const json a = ReadJson(dir / kAgreement);
    md << "## Agreement (" << a.at("metric").get<std::string>() << ")\n\nObserved alpha "
       << Fmt(a.at("alpha_observed").get<double>()) << ".\n\n";
    SummaryTable(md, json::array({a.at("alpha_posterior"), a.at("alpha_counterfactual")}));
  }
  if (has(kCalibration)) {
    const json c = ReadJson(dir / kCalibration);
    md << "## Calibration\n\n| cutpoint | value | interval | class |\n|---|---|---|---|\n";
    for (const auto& e : c.at("cutpoints")) {
      md << "| " << e.at("cutpoint").get<int>() << " | " << Fmt(e.at("value").get<double>(), 2)
         << " | "
         << (e.at("interval").is_number() ? Fmt(e.at("interval").get<double>(), 2) : std::string("-"))
         << " | " << (e.at("classification").is_string() ? e.at("classification").get<std::string>() : std::string("-"))
         << " |\n";
    }
    md << "\n";
  }
  const fs::path out = OutDir(rc);
  MakeDir(out);
  WriteText(out / kReport, md.str());
  return kExitOk;
}

}  // namespace grader_audit::cli
