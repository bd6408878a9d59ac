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

#include "aegis/sim/attack.hpp"

#include <algorithm>
#include <cmath>

#include "aegis/error.hpp"

namespace aegis::sim {

std::string_view AttackName(AttackKind kind) {
  switch (kind) {
    case AttackKind::kNone:
      return "none";
    case AttackKind::kSignFlip:
      return "sign_flip";
    case AttackKind::kLargeValue:
      return "large_value";
    case AttackKind::kRandomGaussian:
      return "random_gaussian";
    case AttackKind::kColludeShift:
      return "collude_shift";
  }
  return "none";
}

AttackKind ParseAttackKind(std::string_view name) {
  for (AttackKind k : {AttackKind::kNone, AttackKind::kSignFlip,
                       AttackKind::kLargeValue, AttackKind::kRandomGaussian,
                       AttackKind::kColludeShift}) {
    if (AttackName(k) == name) return k;
  }
  throw Error(ErrorCode::kInvalidConfig,
              "unknown attack kind '" + std::string(name) + "'");
}

bool AttackSpec::IsByzantine(std::size_t i) const {
  return kind != AttackKind::kNone &&
         std::find(byz_indices.begin(), byz_indices.end(), i) !=
             byz_indices.end();
}

void AttackSpec::Validate(std::size_t n, double alpha) const {
  std::vector<std::size_t> sorted = byz_indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::kInvalidConfig, "duplicate Byzantine index");
  }
  for (std::size_t i : sorted) {
    if (i >= n) {
      throw Error(ErrorCode::kInvalidConfig,
                  "Byzantine index " + std::to_string(i) + " out of range");
    }
  }
  const auto cap =
      static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n)));
  if (sorted.size() > cap) {
    throw Error(ErrorCode::kInvalidConfig,
                std::to_string(sorted.size()) +
                    " Byzantine workers exceed floor(alpha * n) = " +
                    std::to_string(cap));
  }
  if (kind == AttackKind::kRandomGaussian && !(sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "attack sigma must be non-negative");
  }
}

std::vector<double> ApplyAttack(std::span<const double> x,
                                const AttackSpec& spec, std::size_t i,
                                Prg& prg) {
  std::vector<double> out(x.begin(), x.end());
  if (!spec.IsByzantine(i)) return out;
  switch (spec.kind) {
    case AttackKind::kNone:
      break;
    case AttackKind::kSignFlip:
      for (double& v : out) v *= -spec.factor;
      break;
    case AttackKind::kLargeValue:
      std::fill(out.begin(), out.end(), spec.magnitude);
      break;
    case AttackKind::kRandomGaussian:
      for (double& v : out) v = prg.Gaussian(spec.sigma);
      break;
    case AttackKind::kColludeShift:
      if (spec.shift.size() != out.size()) {
        throw Error(ErrorCode::kInvalidConfig,
                    "collude_shift vector length differs from the update");
      }
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += spec.shift[k];
      break;
  }
  return out;
}

}  // namespace aegis::sim
