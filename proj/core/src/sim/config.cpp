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

#include "aegis/sim/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "aegis/error.hpp"

namespace aegis::sim {

SimConfig::SimConfig() {
  round.n = 5;
  round.alpha = 0.2;
  BuildRule();
}

void SimConfig::BuildRule() {
  round.rule =
      MakeRule(rule.kind, rule.f, rule.m, rule.t_a, rule.t_b, rule.nu, round.ring);
}

void SimConfig::Validate() const {
  round.Validate();
  attack.Validate(round.n, round.alpha);
  if (protocol == ProtocolKind::kThreeServer &&
      !std::holds_alternative<MultiKrumRule>(round.rule)) {
    throw Error(ErrorCode::kInvalidConfig,
                "the three-server protocol runs Multi-Krum only");
  }
  if (!(w2s_mbps > 0.0) || !(s2s_mbps > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "link rates must be positive");
  }
}

AggregationRule MakeRule(std::string_view kind, std::size_t f, std::size_t m,
                         double t_a, double t_b, double nu,
                         const RingConfig& ring) {
  if (kind == "mean") return MeanRule{};
  if (kind == "multikrum") return MultiKrumRule{f, m};
  if (kind == "byzsgd") {
    if (!(t_a >= 0.0) || !(t_b >= 0.0) || !(nu >= 0.0)) {
      throw Error(ErrorCode::kInvalidConfig,
                  "byzsgd thresholds must be non-negative");
    }
    return ByzSgdRule{ByzSgdParams::FromReal(t_a, t_b, nu, ring)};
  }
  throw Error(ErrorCode::kInvalidConfig,
              "unknown rule '" + std::string(kind) + "'");
}

namespace {

void CheckKeys(const YAML::Node& node, const std::string& where,
               const std::set<std::string>& allowed) {
  if (!node.IsMap()) {
    throw Error(ErrorCode::kInvalidConfig, where + " must be a mapping");
  }
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) {
      throw Error(ErrorCode::kInvalidConfig,
                  "unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void Read(const YAML::Node& node, const char* key, T& into) {
  if (node[key]) into = node[key].as<T>();
}

}  // namespace

SimConfig ParseSimConfig(std::string_view text) {
  SimConfig cfg;
  try {
    const YAML::Node root = YAML::Load(std::string(text));
    if (root.IsNull()) return cfg;
    CheckKeys(root, "config",
              {"seed", "seeds", "protocol", "n", "alpha", "average", "ring",
               "rule", "ldp", "attack", "task", "bandwidth"});
    Read(root, "seed", cfg.seed);
    Read(root, "seeds", cfg.seeds);
    if (root["protocol"]) {
      cfg.protocol = ParseProtocol(root["protocol"].as<std::string>());
    }
    Read(root, "n", cfg.round.n);
    Read(root, "alpha", cfg.round.alpha);
    Read(root, "average", cfg.round.average);

    if (const auto ring = root["ring"]) {
      CheckKeys(ring, "ring", {"bit_width", "frac_bits", "bound"});
      Read(ring, "bit_width", cfg.round.ring.bit_width);
      Read(ring, "frac_bits", cfg.round.ring.frac_bits);
      Read(ring, "bound", cfg.round.ring.bound);
    }
    if (const auto rule = root["rule"]) {
      CheckKeys(rule, "rule", {"kind", "f", "m", "t_a", "t_b", "nu"});
      Read(rule, "kind", cfg.rule.kind);
      Read(rule, "f", cfg.rule.f);
      Read(rule, "m", cfg.rule.m);
      Read(rule, "t_a", cfg.rule.t_a);
      Read(rule, "t_b", cfg.rule.t_b);
      Read(rule, "nu", cfg.rule.nu);
    }
    cfg.BuildRule();
    if (const auto ldp = root["ldp"]) {
      CheckKeys(ldp, "ldp", {"sigma", "eta"});
      LdpConfig l;
      Read(ldp, "sigma", l.sigma);
      Read(ldp, "eta", l.eta);
      cfg.round.ldp = l;
    }
    if (const auto attack = root["attack"]) {
      CheckKeys(attack, "attack",
                {"kind", "factor", "magnitude", "sigma", "shift",
                 "byz_indices"});
      if (attack["kind"]) {
        cfg.attack.kind = ParseAttackKind(attack["kind"].as<std::string>());
      }
      Read(attack, "factor", cfg.attack.factor);
      Read(attack, "magnitude", cfg.attack.magnitude);
      Read(attack, "sigma", cfg.attack.sigma);
      Read(attack, "shift", cfg.attack.shift);
      Read(attack, "byz_indices", cfg.attack.byz_indices);
    }
    if (const auto task = root["task"]) {
      CheckKeys(task, "task",
                {"model", "dim", "samples_per_worker", "sharding", "eta",
                 "rounds", "clip", "noise"});
      if (task["model"]) {
        cfg.task.model = ParseModelKind(task["model"].as<std::string>());
      }
      if (task["sharding"]) {
        cfg.task.sharding = ParseSharding(task["sharding"].as<std::string>());
      }
      Read(task, "dim", cfg.task.dim);
      Read(task, "samples_per_worker", cfg.task.samples_per_worker);
      Read(task, "eta", cfg.task.eta);
      Read(task, "rounds", cfg.task.rounds);
      Read(task, "clip", cfg.task.clip);
      Read(task, "noise", cfg.task.noise);
    }
    if (const auto bw = root["bandwidth"]) {
      CheckKeys(bw, "bandwidth", {"w2s_mbps", "s2s_mbps"});
      Read(bw, "w2s_mbps", cfg.w2s_mbps);
      Read(bw, "s2s_mbps", cfg.s2s_mbps);
    }
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kInvalidConfig,
                std::string("config parse error: ") + e.what());
  }
  return cfg;
}

SimConfig LoadSimConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kInvalidConfig,
                "cannot open config " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return ParseSimConfig(text.str());
}

bool ApplySeedEnv(SimConfig& cfg) {
  const char* value = std::getenv(kSeedEnvVar);
  if (value == nullptr || *value == '\0') return false;
  try {
    std::size_t used = 0;
    const unsigned long long seed = std::stoull(value, &used, 0);
    if (used != std::string_view(value).size()) throw std::invalid_argument("");
    cfg.seed = seed;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidConfig,
                std::string(kSeedEnvVar) + " is not an integer: " + value);
  }
  return true;
}

}  // namespace aegis::sim
