/*
 * Copyright 2026 The Aegis Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef AEGIS_SIM_CONFIG_HPP_
#define AEGIS_SIM_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "aegis/audit.hpp"
#include "aegis/protocol.hpp"
#include "aegis/sim/attack.hpp"
#include "aegis/sim/train.hpp"

namespace aegis::sim {

inline constexpr const char* kSeedEnvVar = "AEGIS_SEED";

// Rule as written in the config; thresholds are in real units and are
// converted to ring units by SimConfig::BuildRule().
struct RuleSpec {
  std::string kind = "multikrum";
  std::size_t f = 1;
  std::size_t m = 3;
  double t_a = 0.0;
  double t_b = 0.0;
  double nu = 0.0;
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;  // train repetitions; empty means {seed}
  ProtocolKind protocol = ProtocolKind::kTwoServer;
  RoundConfig round;
  RuleSpec rule;
  AttackSpec attack;
  TrainTask task;
  double w2s_mbps = 100.0;
  double s2s_mbps = 1000.0;

  SimConfig();
  // Rebuilds round.rule from `rule` and the current ring.
  void BuildRule();
  void Validate() const;
};

// YAML schema:
//   seed, seeds, protocol, n, alpha, average,
//   ring: {bit_width, frac_bits, bound}
//   rule: {kind: mean|multikrum|byzsgd, f, m, t_a, t_b, nu}
//   ldp: {sigma, eta}
//   attack: {kind, factor, magnitude, sigma, shift, byz_indices}
//   task: {model, dim, samples_per_worker, sharding, eta, rounds, clip, noise}
//   bandwidth: {w2s_mbps, s2s_mbps}
// Unknown keys are rejected. Throws kInvalidConfig.
SimConfig ParseSimConfig(std::string_view yaml);
SimConfig LoadSimConfig(const std::filesystem::path& path);

// Replaces cfg.seed when AEGIS_SEED is set. Returns true if it was.
bool ApplySeedEnv(SimConfig& cfg);

AggregationRule MakeRule(std::string_view kind, std::size_t f, std::size_t m,
                         double t_a, double t_b, double nu,
                         const RingConfig& ring);

}  // namespace aegis::sim

#endif  // AEGIS_SIM_CONFIG_HPP_
