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

#ifndef AEGIS_THREE_SERVER_HPP_
#define AEGIS_THREE_SERVER_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "aegis/mpc.hpp"
#include "aegis/oracles.hpp"
#include "aegis/prg.hpp"
#include "aegis/protocol.hpp"
#include "aegis/ring.hpp"

namespace aegis {

inline constexpr std::uint64_t kDefaultFieldPrime = 67;

// Additive shares over Z_p of the bits of an ell-bit value. Index 0 is the
// least significant bit.
struct BitShares {
  std::uint64_t prime = kDefaultFieldPrime;
  std::vector<std::uint64_t> s1;
  std::vector<std::uint64_t> s2;

  std::size_t ell() const { return s1.size(); }
};

BitShares ShareBits(std::uint64_t x, std::size_t ell, std::uint64_t prime,
                    Prg& prg);

// Randomness common to S1 and S2 for one comparison: multipliers s_i and
// u_i in Z_p^* and a permutation of the ell positions.
struct PcCommonRandomness {
  std::vector<std::uint64_t> s;
  std::vector<std::uint64_t> u;
  std::vector<std::size_t> perm;
};

PcCommonRandomness DrawPcRandomness(std::size_t ell, std::uint64_t prime,
                                    Prg& common);

// Message of server j (0 for S1, 1 for S2) to S3.
std::vector<std::uint64_t> PrivateCompareMessage(
    int j, std::span<const std::uint64_t> x_bit_shares, std::uint64_t r,
    bool beta, const PcCommonRandomness& cr, std::uint64_t prime);

// S3's output: 1 iff some reconstructed entry is zero.
bool PrivateCompareResolve(std::span<const std::uint64_t> d1,
                           std::span<const std::uint64_t> d2,
                           std::uint64_t prime);

// Runs both servers and S3 in memory. Returns beta xor (x > r).
bool PrivateCompare(const BitShares& x, std::uint64_t r, bool beta,
                    Prg& common);

// Shares of zero held by S1 and S2, drawn from their common stream.
std::pair<RingVector, RingVector> ZeroShares(unsigned bit_width,
                                             std::size_t dim, Prg& common);

// Shares of x when alpha = 0 and of y when alpha = 1. alpha is a shared
// scalar; t1 and t2 are elementwise triples of the vector dimension.
SharePair SelectShare(const SharePair& alpha, const SharePair& x,
                      const SharePair& y,
                      const std::pair<RingVector, RingVector>& zero,
                      BeaverTripleShare& t1, BeaverTripleShare& t2);

struct ThreeServerOptions {
  std::uint64_t prime = kDefaultFieldPrime;
  RoundOptions round;
};

struct ThreeServerResult {
  RoundResult round;
  // Comparisons evaluated through S3.
  std::size_t comparisons = 0;
};

// Multi-Krum without revealing distances: S3 supplies triples, comparison
// masks and permuted selection vectors. Only the selected sum is opened,
// to S1 and S2. result.round.p is rebuilt by the driver from the servers'
// selection shares for verification and is not sent to any party.
class ThreeServerSession {
 public:
  ThreeServerSession(RoundConfig cfg, std::uint64_t seed,
                     std::uint64_t prime = kDefaultFieldPrime);

  ThreeServerResult RunRound(std::span<const std::vector<double>> inputs,
                             const RoundOptions& options = {});

  const RoundConfig& config() const { return cfg_; }

 private:
  RoundConfig cfg_;
  Prg root_;
  std::uint64_t prime_;
  std::uint64_t round_ = 0;
};

ThreeServerResult ThreeServerMultiKrum(
    std::span<const std::vector<double>> inputs, const RoundConfig& cfg,
    Prg& prg, const ThreeServerOptions& options = {});

}  // namespace aegis

#endif  // AEGIS_THREE_SERVER_HPP_
