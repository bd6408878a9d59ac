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

#ifndef AEGIS_SIM_ATTACK_HPP_
#define AEGIS_SIM_ATTACK_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aegis/prg.hpp"

namespace aegis::sim {

enum class AttackKind {
  kNone,
  kSignFlip,
  kLargeValue,
  kRandomGaussian,
  kColludeShift,
};

std::string_view AttackName(AttackKind kind);
AttackKind ParseAttackKind(std::string_view name);

struct AttackSpec {
  AttackKind kind = AttackKind::kNone;
  double factor = 1.0;        // sign_flip: x -> -factor * x
  double magnitude = 0.0;     // large_value: every coordinate set to this
  double sigma = 0.0;         // random_gaussian: N(0, sigma^2) per coordinate
  std::vector<double> shift;  // collude_shift: x -> x + shift
  std::vector<std::size_t> byz_indices;

  bool IsByzantine(std::size_t i) const;
  // Throws kInvalidConfig when more than floor(alpha * n) workers are marked
  // or an index is out of range.
  void Validate(std::size_t n, double alpha) const;
};

// Honest indices pass through unchanged.
std::vector<double> ApplyAttack(std::span<const double> x,
                                const AttackSpec& spec, std::size_t i,
                                Prg& prg);

}  // namespace aegis::sim

#endif  // AEGIS_SIM_ATTACK_HPP_
