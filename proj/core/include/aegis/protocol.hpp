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

#ifndef AEGIS_PROTOCOL_HPP_
#define AEGIS_PROTOCOL_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "aegis/message.hpp"
#include "aegis/mpc.hpp"
#include "aegis/oracles.hpp"
#include "aegis/prg.hpp"
#include "aegis/ring.hpp"

namespace aegis {

struct LdpConfig {
  double sigma = 0.0;
  double eta = 0.0;
};

struct RoundConfig {
  std::size_t n = 0;
  double alpha = 0.0;
  AggregationRule rule = MeanRule{};
  RingConfig ring;
  std::optional<LdpConfig> ldp;
  // Robust rules: divide the revealed sum by the number of selected workers
  // before the model update. Off means the plain weighted sum is applied.
  bool average = true;

  void Validate() const;
  std::size_t MaxByzantine() const;
};

// Test-only deviations from the honest schedule, used to check that the
// auditor notices them.
enum class Fault {
  kNone,
  kLeakDistancesToS1,
  kLeakGradientShareToS3,
};

struct RoundOptions {
  // Worker uploads lost before the collection deadline, per server.
  std::vector<std::size_t> drop_at_s1;
  std::vector<std::size_t> drop_at_s2;
  Fault fault = Fault::kNone;
  // Inner-product triples withheld from the dealer's provisioning.
  std::size_t triple_shortfall = 0;
};

struct RoundResult {
  std::uint64_t round = 0;
  RingVector z;                 // sum_i p_i x_i revealed on S1
  std::vector<double> update;   // decoded z, averaged when configured
  WeightVector p;               // length n; dropped workers carry 0
  std::vector<std::size_t> participants;
  std::vector<RingVector> encoded_inputs;  // what the servers jointly held
  TranscriptSet transcripts;
  TrafficStats traffic;
};

// Splits x_i into two shares and addresses them to S1 and S2. The worker
// keeps nothing between rounds.
std::array<Message, 2> WorkerSubmit(std::size_t worker, std::span<const double> x,
                                    const RingConfig& ring, std::uint64_t round,
                                    Prg& prg);

class Worker {
 public:
  explicit Worker(std::size_t index) : index_(index) {}

  std::array<Message, 2> Submit(std::span<const double> x,
                                const RingConfig& ring, std::uint64_t round,
                                Prg& prg) const {
    return WorkerSubmit(index_, x, ring, round, prg);
  }
  // Decodes the public aggregate from a ModelBroadcast.
  std::vector<double> Pull(const Message& broadcast,
                           const RingConfig& ring) const;
  // Workers are stateless across rounds.
  std::vector<std::uint8_t> SerializeState() const { return {}; }
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// Per-worker accumulators for the ByzantineSGD rule: S2 keeps A_old in the
// clear, both servers keep their share of B_old.
struct ByzSgdState {
  std::vector<std::uint64_t> a_old;
  std::vector<ShareVector> b_old_s1;
  std::vector<ShareVector> b_old_s2;
};

// Holds both servers and the dealer for a sequence of rounds.
class TwoServerSession {
 public:
  TwoServerSession(RoundConfig cfg, std::uint64_t seed);

  // inputs[i] is worker i's (post-attack) update.
  RoundResult RunRound(std::span<const std::vector<double>> inputs,
                       const RoundOptions& options = {});

  // Public w - w0 used by the ByzantineSGD inner products.
  void SetModelDelta(std::vector<double> w_minus_w0);

  const RoundConfig& config() const { return cfg_; }
  const ByzSgdState& byzsgd_state() const { return byz_; }
  std::uint64_t rounds_run() const { return round_; }

 private:
  RoundConfig cfg_;
  Prg root_;
  std::uint64_t round_ = 0;
  std::vector<double> model_delta_;
  ByzSgdState byz_;
};

RoundResult RunRoundNonRobust(std::span<const std::vector<double>> inputs,
                              const RoundConfig& cfg, Prg& prg,
                              const RoundOptions& options = {});
RoundResult RunRoundRobust(std::span<const std::vector<double>> inputs,
                           const RoundConfig& cfg, Prg& prg,
                           const RoundOptions& options = {});

struct LdpResult {
  RoundResult round;
  std::vector<double> noise;  // nu drawn for this round, per coordinate
};

// Worker 0 adds n * nu with nu ~ N(0, sigma^2) per coordinate before
// sharing; the mean-rule round then reveals sum_i x_i + n * nu.
LdpResult LdpAggregate(std::span<const std::vector<double>> inputs,
                       double sigma, const RoundConfig& cfg, Prg& prg);

// Stream ids used to derive per-round generators; exposed so tests can
// replay draws.
inline constexpr std::uint64_t kDealerStream = 1;
inline constexpr std::uint64_t kS1Stream = 2;
inline constexpr std::uint64_t kS2Stream = 3;
inline constexpr std::uint64_t kNoiseStream = 4;
inline constexpr std::uint64_t kCommonStream = 5;
inline constexpr std::uint64_t kS3Stream = 6;
inline constexpr std::uint64_t kWorkerStreamBase = 1000;

}  // namespace aegis

#endif  // AEGIS_PROTOCOL_HPP_
