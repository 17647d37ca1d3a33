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

// Draw and diagnostics serialization.

#include <charconv>
#include <fstream>

#include <nlohmann/json.hpp>

#include "grader_audit/error.hpp"
#include "grader_audit/inference.hpp"

namespace grader_audit {

namespace {

std::string Num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Interaction names such as "grader_llm[a,b]" carry commas, so header
// cells are quoted when needed.
std::string Quote(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (const char ch : cell) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        out.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.emplace_back();
    } else if (ch != '\r') {
      out.back() += ch;
    }
  }
  return out;
}

}  // namespace

void WriteDrawsCsv(const PosteriorDraws& draws,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "chain,iteration";
  for (const auto& n : draws.names()) out << ',' << Quote(n);
  out << '\n';
  for (int c = 0; c < draws.chains(); ++c) {
    for (int i = 0; i < draws.iterations(); ++i) {
      out << c + 1 << ',' << i + 1;
      for (const double v : draws.Row(c, i)) out << ',' << Num(v);
      out << '\n';
    }
  }
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

PosteriorDraws ReadDrawsCsv(const std::filesystem::path& path, int n_free) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::kMalformedCsv, path.string() + " is empty");
  }
  auto header = SplitLine(line);
  if (header.size() < 3 || header[0] != "chain" || header[1] != "iteration") {
    throw Error(ErrorKind::kMalformedCsv,
                path.string() + ": expected chain,iteration header");
  }
  std::vector<std::string> names(header.begin() + 2, header.end());
  if (n_free < 0 || n_free > static_cast<int>(names.size())) {
    throw Error(ErrorKind::kShapeMismatch, "bad free-parameter count");
  }
  std::vector<double> values;
  int chains = 0;
  std::vector<int> per_chain;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = SplitLine(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::kMalformedCsv,
                  path.string() + ": row " + std::to_string(row) +
                      " has the wrong number of fields");
    }
    int chain = 0;
    std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), chain);
    if (chain < 1 || chain < chains || chain > chains + 1) {
      throw Error(ErrorKind::kMalformedCsv,
                  path.string() + ": chains out of order at row " +
                      std::to_string(row));
    }
    if (chain > chains) {
      chains = chain;
      per_chain.push_back(0);
    }
    ++per_chain.back();
    for (std::size_t k = 2; k < cells.size(); ++k) {
      double v = 0.0;
      const auto* first = cells[k].data();
      const auto* last = first + cells[k].size();
      const auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc() || res.ptr != last) {
        // to_chars writes inf/nan, which from_chars also reads; anything
        // else is corrupt.
        throw Error(ErrorKind::kMalformedCsv,
                    path.string() + ": bad number at row " + std::to_string(row));
      }
      values.push_back(v);
    }
  }
  if (chains == 0) throw Error(ErrorKind::kMalformedCsv, path.string() + " has no draws");
  for (int n : per_chain) {
    if (n != per_chain[0]) {
      throw Error(ErrorKind::kMalformedCsv, "chains have unequal lengths");
    }
  }
  return PosteriorDraws(std::move(names), n_free, chains, per_chain[0],
                        std::move(values));
}

void to_json(nlohmann::json& j, const Diagnostics& d) {
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t p = 0; p < d.names.size(); ++p) {
    nlohmann::json e{{"name", d.names[p]}};
    e["rhat"] = p < d.rhat.size() ? nlohmann::json(d.rhat[p]) : nlohmann::json();
    e["ess"] = p < d.ess.size() ? nlohmann::json(d.ess[p]) : nlohmann::json();
    params.push_back(std::move(e));
  }
  j = nlohmann::json{{"converged", d.converged},
                     {"note", d.note},
                     {"rhat_threshold", kRhatThreshold},
                     {"ess_threshold", kEssThreshold},
                     {"divergences", d.divergences},
                     {"step_size", d.step_size},
                     {"mean_accept", d.mean_accept},
                     {"parameters", std::move(params)}};
}

}  // namespace grader_audit
