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

#ifndef GRADER_AUDIT_RANDOM_HPP_
#define GRADER_AUDIT_RANDOM_HPP_

#include <array>
#include <cstdint>

namespace grader_audit {

// xoshiro256** with SplitMix64 seeding. Distribution code is written out here
// rather than taken from <random> so streams are identical across standard
// libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream for (seed, stream index); used for per-chain and
  // per-draw generators so results do not depend on scheduling.
  static Rng ForStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t NextU64();
  // Uniform on the open interval (0, 1).
  double Uniform();
  double Uniform(double low, double high);
  double Normal();
  double Normal(double mean, double sd) { return mean + sd * Normal(); }
  double LogNormal(double meanlog, double sdlog);
  bool Bernoulli(double p) { return Uniform() < p; }
  // Uniform integer in [0, n).
  std::uint64_t Below(std::uint64_t n);

 private:
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t SplitMix64(std::uint64_t& state);

}  // namespace grader_audit

#endif  // GRADER_AUDIT_RANDOM_HPP_
