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

#ifndef AEGIS_ORACLES_HPP_
#define AEGIS_ORACLES_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "aegis/ring.hpp"

namespace aegis {

// Pairwise squared distances {d2(i,j)}_{i<j} as ring scalars at scale 2.
class DistanceSet {
 public:
  DistanceSet() = default;
  DistanceSet(std::size_t n, unsigned bit_width);

  std::size_t n() const { return n_; }
  unsigned bit_width() const { return bit_width_; }

  void Set(std::size_t i, std::size_t j, std::uint64_t d2);
  // Symmetric; At(i, i) is zero.
  std::uint64_t At(std::size_t i, std::size_t j) const;
  std::int64_t SignedAt(std::size_t i, std::size_t j) const;
  bool Complete() const;

  // Every entry multiplied by `factor` (mod the ring).
  DistanceSet Scaled(std::uint64_t factor) const;

 private:
  std::size_t Index(std::size_t i, std::size_t j) const;

  std::size_t n_ = 0;
  unsigned bit_width_ = 64;
  std::vector<std::uint64_t> d2_;
  std::vector<bool> present_;
};

// Plaintext distances of encoded vectors, computed in the same ring.
DistanceSet PlainDistances(std::span<const RingVector> xs);

struct WeightVector {
  std::vector<std::uint64_t> p;

  std::vector<std::size_t> Selected() const;
  std::size_t Count() const { return Selected().size(); }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;
};

// Sum of the n-f-2 smallest distances from each worker, the m lowest scores
// win, ties go to the lower index.
WeightVector MultiKrum(const DistanceSet& d, std::size_t f, std::size_t m);

// Krum scores, exposed for tests and the three-server cross-check.
std::vector<__int128> MultiKrumScores(const DistanceSet& d, std::size_t f);

// Thresholds in ring units: t_a at scale 2 (A is an inner product of two
// encoded vectors), t_b_sq and nu_sq are squared radii at scale 2.
struct ByzSgdParams {
  std::uint64_t t_a = 0;
  std::uint64_t t_b_sq = 0;
  std::uint64_t nu_sq = 0;

  static ByzSgdParams FromReal(double t_a, double t_b, double nu,
                               const RingConfig& cfg);
};

// Median / majority filter over accumulated statistics. A holds per-worker
// ring scalars (scale 2); dist_b and dist_g cover all A.size() workers.
WeightVector ByzantineSgdSelect(std::span<const std::uint64_t> a,
                                const DistanceSet& dist_b,
                                const DistanceSet& dist_g,
                                const ByzSgdParams& params,
                                std::span<const std::size_t> good_set,
                                unsigned bit_width);

WeightVector MeanWeights(std::size_t n);

struct MeanRule {};
struct MultiKrumRule {
  std::size_t f = 0;
  std::size_t m = 1;
};
struct ByzSgdRule {
  ByzSgdParams params;
};
using AggregationRule = std::variant<MeanRule, MultiKrumRule, ByzSgdRule>;

const char* RuleName(const AggregationRule& rule);
bool IsRobust(const AggregationRule& rule);

// Plaintext replay of the per-worker state the servers keep for the
// ByzantineSGD rule.
struct ByzSgdPlainState {
  std::vector<std::uint64_t> a_old;
  std::vector<RingVector> b_old;
};

struct ReferenceResult {
  RingVector z;  // sum_i p_i x_i, scale 1
  WeightVector p;
};

// The non-private pipeline the secure protocol must match bit for bit. For
// ByzSgdRule, `state` and `model_delta` (w - w0, encoded) are required; the
// state is only updated when the round succeeds. Throws kOracleAbort when
// fewer than two workers survive the ByzantineSGD filter.
ReferenceResult ReferenceRobustAggregate(std::span<const RingVector> xs,
                                         const AggregationRule& rule,
                                         ByzSgdPlainState* state = nullptr,
                                         const RingVector* model_delta = nullptr);

}  // namespace aegis

#endif  // AEGIS_ORACLES_HPP_
